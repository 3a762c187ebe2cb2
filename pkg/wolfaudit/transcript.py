"""JSONL match transcripts.

One record per line, each tagged by ``record``: a ``header``, every game
event in order, the probe records, then a ``footer``. Records are written
with sorted keys and no wall-clock fields so equal matches produce equal
bytes.
"""

from dataclasses import dataclass, field
from pathlib import Path

import orjson

from .game import EventKind, GameEvent, GameState, GenderConfig, PlayerProfile, Role, replay, state_hash
from .harness import DecisionProbe
from .roster import Gender, NameAssignment
from .utils import (
    ROUND_CAP,
    ConsistencyError,
    IllegalActionError,
    IntegrityError,
    TranscriptError,
    atomic_write,
    dumps,
)

SCHEMA_VERSION = 1


@dataclass
class Transcript:
    header: dict
    events: list[GameEvent] = field(default_factory=list)
    probes: list[DecisionProbe] = field(default_factory=list)
    footer: dict | None = None

    @property
    def match_id(self) -> str:
        return self.header["match_id"]

    @property
    def status(self) -> str | None:
        return self.footer and self.footer["status"]

    @property
    def finished(self) -> bool:
        return self.status == "finished"

    @property
    def winner(self) -> str | None:
        return self.footer and self.footer.get("winner")

    @property
    def drawn(self) -> bool:
        return self.finished and self.winner is None

    @property
    def config(self) -> GenderConfig | None:
        key = self.header.get("config")
        return GenderConfig.from_key(key) if key else None

    @property
    def names(self) -> NameAssignment | None:
        names = self.header.get("names")
        return NameAssignment(tuple(names)) if names else None

    def players(self) -> list[PlayerProfile]:
        """Cast as assigned, with alive flags at the end of the log."""
        dead = {
            e.target for e in self.events if e.kind is EventKind.ELIMINATION
        }
        return [
            PlayerProfile(
                seat=e.actor,
                role=Role(e.payload["role"]),
                true_gender=Gender(e.payload["gender"]),
                proxy_name=e.payload.get("name"),
                alive=e.actor not in dead,
            )
            for e in self.events
            if e.kind is EventKind.ROLE_ASSIGNED
        ]

    def replay(self) -> GameState:
        try:
            state = replay(
                self.config,
                self.header["seed"],
                self.names,
                self.events,
                self.match_id,
                self.header.get("round_cap", ROUND_CAP),
            )
        except (IllegalActionError, ConsistencyError) as err:
            raise IntegrityError("回放时出现非法操作", self.match_id, err)
        except (KeyError, ValueError, TypeError) as err:
            raise TranscriptError("事件内容不完整", self.match_id, err)
        if self.footer is None:
            raise IntegrityError("缺少文件尾", self.match_id)
        # an aborted match stops between transitions, so only its events are comparable
        if self.finished and state_hash(state) != self.footer["final_hash"]:
            raise IntegrityError("终局哈希不一致", self.match_id)
        return state

    def dumps(self) -> bytes:
        lines = [dumps({"record": "header", **self.header})]
        lines += [dumps({"record": "event", **e.to_dict()}) for e in self.events]
        lines += [dumps({"record": "probe", **p.to_dict()}) for p in self.probes]
        if self.footer is not None:
            lines.append(dumps({"record": "footer", **self.footer}))
        return b"\n".join(lines) + b"\n"

    def write(self, path: Path) -> None:
        atomic_write(path, self.dumps())

    @classmethod
    def loads(cls, data: bytes, ref: str = "") -> "Transcript":
        transcript = None
        for number, line in enumerate(data.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = orjson.loads(line)
                kind = record.pop("record")
            except (orjson.JSONDecodeError, KeyError, AttributeError) as e:
                raise TranscriptError("记录解析失败", f"{ref}:{number}", e)
            if transcript is None:
                if kind != "header":
                    raise TranscriptError("缺少文件头", f"{ref}:{number}")
                transcript = cls(record)
                continue
            if transcript.footer is not None:
                raise TranscriptError("文件尾之后还有记录", f"{ref}:{number}")
            try:
                match kind:
                    case "event":
                        transcript.events.append(GameEvent.from_dict(record))
                    case "probe":
                        transcript.probes.append(DecisionProbe.from_dict(record))
                    case "footer":
                        transcript.footer = record
                    case _:
                        raise TranscriptError("未知记录类型", f"{ref}:{number}", kind)
            except (KeyError, ValueError, TypeError) as e:
                raise TranscriptError("记录字段错误", f"{ref}:{number}", e)
        if transcript is None or transcript.footer is None:
            raise TranscriptError("文件不完整", ref)
        return transcript

    @classmethod
    def load(cls, path: Path | str) -> "Transcript":
        path = Path(path)
        return cls.loads(path.read_bytes(), str(path))


def load_run(run_dir: Path | str) -> list[Transcript]:
    """Every transcript of a run directory, ordered by match id."""
    return [Transcript.load(path) for path in sorted(Path(run_dir).glob("*.jsonl"))]
