import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..game import DecisionKind
from ..utils import (
    NEUTRAL_SCORE,
    SCORE_MAX,
    SCORE_MIN,
    ReplyParseError,
    ReplyValidationError,
)

MARKER = "===DECISION==="
VERBS = ("kill", "protect", "see", "vote", "abstain", "statement")

# verbs accepted for each decision kind, keyed by the kind's task verb
ACCEPTED = {
    "kill": ("kill",),
    "protect": ("protect",),
    "see": ("see",),
    "vote": ("vote", "abstain"),
    "reliability": ("vote", "abstain"),
    "nominate": ("vote",),
    "statement": ("statement",),
}

_ACTION = re.compile(r"^action:\s*(\w+)\s*(.*)$", re.IGNORECASE)
_RELIABILITY = re.compile(r"^reliability:\s*(.*)$", re.IGNORECASE)
_REASONING = re.compile(r"^reasoning:\s*(.*)$", re.IGNORECASE)
_PAIR = re.compile(r"^(\d+)\s*=\s*(-?\d+)$")


@dataclass(frozen=True)
class ReliabilityVector:
    scores: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def uniform(cls, seats: Iterable[int], score: int = NEUTRAL_SCORE) -> "ReliabilityVector":
        return cls({seat: score for seat in sorted(seats)})

    def get(self, seat: int, default: int = NEUTRAL_SCORE) -> int:
        return self.scores.get(seat, default)

    def to_dict(self) -> dict[str, int]:
        return {str(k): v for k, v in sorted(self.scores.items())}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ReliabilityVector":
        return cls({int(k): int(v) for k, v in data.items()})


@dataclass(frozen=True)
class Action:
    verb: str
    target: int | None = None
    text: str = ""

    @property
    def decision(self) -> int | None:
        """Target used for equality across arms; abstain is its own value (None)."""
        return None if self.verb == "abstain" else self.target


@dataclass(frozen=True)
class AgentReply:
    raw: str
    reasoning: str
    reliability: ReliabilityVector
    action: Action
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "reasoning": self.reasoning,
            "reliability": self.reliability.to_dict(),
            "verb": self.action.verb,
            "target": self.action.target,
            "text": self.action.text,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AgentReply":
        return cls(
            raw=data["raw"],
            reasoning=data["reasoning"],
            reliability=ReliabilityVector.from_dict(data["reliability"]),
            action=Action(data["verb"], data["target"], data.get("text", "")),
            fallback=data["fallback"],
        )


def format_reply(action: Action, reliability: ReliabilityVector, reasoning: str) -> str:
    if action.verb == "statement":
        head = f"statement {action.text}"
    elif action.target is None:
        head = action.verb
    else:
        head = f"{action.verb} {action.target}"
    scores = ",".join(f"{seat}={score}" for seat, score in sorted(reliability.scores.items()))
    return f"{MARKER}\naction: {head}\nreliability: {scores}\nreasoning: {reasoning}\n"


def parse_reply(
    raw: str,
    kind: DecisionKind,
    alive: Iterable[int],
    *,
    owner: int | None = None,
    verb: str | None = None,
    legal: Iterable[int] | None = None,
) -> AgentReply:
    """Extract the last structured block from a free-text reply.

    ``verb`` is the task verb the prompt asked for; ``legal`` narrows targets
    below the alive set (e.g. werewolves cannot kill werewolves).
    """
    if not raw or MARKER not in raw:
        raise ReplyParseError("回复缺少结构化决策块", kind, raw[:200] if raw else raw)
    alive = set(alive)
    block = raw.rsplit(MARKER, 1)[1]
    lines = [line.strip() for line in block.strip().splitlines() if line.strip()]
    action_line = next((m for m in map(_ACTION.match, lines) if m), None)
    reliability_line = next((m for m in map(_RELIABILITY.match, lines) if m), None)
    reasoning_line = next((m for m in map(_REASONING.match, lines) if m), None)
    if action_line is None or reliability_line is None:
        raise ReplyParseError("决策块缺少 action 或 reliability 行", kind, block[:200])

    action_verb = action_line.group(1).lower()
    argument = action_line.group(2).strip()
    if action_verb not in VERBS:
        raise ReplyParseError("未知的动作", action_verb, block[:200])
    if verb is not None and action_verb not in ACCEPTED[verb]:
        raise ReplyValidationError("动作与任务不符", f"{verb} -> {action_verb}")
    if action_verb == "statement":
        if not argument:
            raise ReplyValidationError("发言内容为空", kind)
        action = Action("statement", text=argument)
    elif action_verb == "abstain":
        action = Action("abstain")
    else:
        target = re.match(r"^(?:player\s*)?(\d+)\b", argument, re.IGNORECASE)
        if not target:
            raise ReplyParseError("动作缺少目标座位", action_line.group(0))
        seat = int(target.group(1))
        allowed = alive if legal is None else set(legal) & alive
        if seat not in allowed:
            raise ReplyValidationError("非法目标", f"{action_verb} {seat}", sorted(allowed))
        action = Action(action_verb, seat)

    scores = {}
    body = reliability_line.group(1).strip()
    for item in filter(None, (part.strip() for part in body.split(","))):
        pair = _PAIR.match(item)
        if not pair:
            raise ReplyParseError("可信度格式错误", item)
        seat, score = int(pair.group(1)), int(pair.group(2))
        if not SCORE_MIN <= score <= SCORE_MAX:
            raise ReplyValidationError("可信度超出范围", f"{seat}={score}")
        if seat not in alive or seat == owner:
            raise ReplyValidationError("可信度对象非法", f"{seat}={score}")
        scores[seat] = score
    if kind in (DecisionKind.RELIABILITY, DecisionKind.VOTE):
        expected = alive - {owner}
        if set(scores) != expected:
            raise ReplyValidationError("可信度未覆盖所有存活玩家", sorted(scores), sorted(expected))

    return AgentReply(
        raw=raw,
        reasoning=reasoning_line.group(1).strip() if reasoning_line else "",
        reliability=ReliabilityVector(scores),
        action=action,
    )


def fallback_reply(
    kind: DecisionKind, verb: str, legal: Iterable[int], others: Iterable[int], raw: str = ""
) -> AgentReply:
    legal = sorted(legal)
    match verb:
        case "vote" | "reliability":
            action = Action("abstain")
        case "statement":
            action = Action("statement", text="I have nothing to add.")
        case "nominate":
            action = Action("vote", legal[0])
        case _:
            action = Action(verb, legal[0])
    return AgentReply(
        raw=raw,
        reasoning="fallback",
        reliability=ReliabilityVector.uniform(others),
        action=action,
        fallback=True,
    )
