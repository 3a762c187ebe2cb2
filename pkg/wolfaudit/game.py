import random
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Iterable, Mapping, Sequence

from .roster import Gender, NameAssignment
from .utils import (
    ROUND_CAP,
    ConfigurationError,
    ConsistencyError,
    IllegalActionError,
    IntegrityError,
    dumps,
    logger,
    sha256_hex,
)

SEATS = tuple(range(1, 8))


class Role(StrEnum):
    WEREWOLF = "Werewolf"
    VILLAGER = "Villager"
    SEER = "Seer"
    GUARD = "Guard"


STANDARD_ROLES: tuple[Role, ...] = (
    Role.WEREWOLF,
    Role.WEREWOLF,
    Role.VILLAGER,
    Role.VILLAGER,
    Role.VILLAGER,
    Role.SEER,
    Role.GUARD,
)


class Winner(StrEnum):
    WEREWOLF = "Werewolf"
    VILLAGER = "Villager"

    def includes(self, role: Role) -> bool:
        return (role is Role.WEREWOLF) == (self is Winner.WEREWOLF)


class Phase(StrEnum):
    SETUP = "Setup"
    SHERIFF_ELECTION = "SheriffElection"
    NIGHT = "Night"
    DAY_ANNOUNCE = "DayAnnounce"
    DAY_STATEMENTS = "DayStatements"
    DAY_VOTE = "DayVote"
    FINISHED = "Finished"


class EventKind(StrEnum):
    ROLE_ASSIGNED = "RoleAssigned"
    SHERIFF_ELECTED = "SheriffElected"
    NIGHT_KILL = "NightKill"
    NIGHT_PROTECT = "NightProtect"
    NIGHT_SEE = "NightSee"
    DAWN_ANNOUNCEMENT = "DawnAnnouncement"
    STATEMENT = "Statement"
    RELIABILITY_UPDATE = "ReliabilityUpdate"
    VOTE = "Vote"
    ELIMINATION = "Elimination"
    DRAW = "Draw"
    WIN = "Win"


class DecisionKind(StrEnum):
    """Decision points. Only the first three are audited scenarios."""

    SKILL = "s1"
    VOTE = "s2"
    RELIABILITY = "s3"
    NOMINATE = "nominate"
    STATEMENT = "statement"

    @property
    def audited(self) -> bool:
        return self in (DecisionKind.SKILL, DecisionKind.VOTE, DecisionKind.RELIABILITY)


SKILL_VERB = {Role.WEREWOLF: "kill", Role.GUARD: "protect", Role.SEER: "see"}


def decision_verb(role: Role, kind: DecisionKind) -> str:
    match kind:
        case DecisionKind.SKILL:
            if role not in SKILL_VERB:
                raise IllegalActionError("该角色没有夜间技能", role)
            return SKILL_VERB[role]
        case DecisionKind.VOTE:
            return "vote"
        case DecisionKind.RELIABILITY:
            return "reliability"
        case DecisionKind.NOMINATE:
            return "nominate"
        case DecisionKind.STATEMENT:
            return "statement"


@dataclass(frozen=True)
class GenderConfig:
    seer: str
    guard: str
    werewolf_pair: str
    villager_triple: str

    def validate(self) -> None:
        slots = {
            "seer": (self.seer, 1),
            "guard": (self.guard, 1),
            "werewolf_pair": (self.werewolf_pair, 2),
            "villager_triple": (self.villager_triple, 3),
        }
        for slot, (value, size) in slots.items():
            if len(value) != size or set(value) - {"M", "F"}:
                raise ConfigurationError("性别配置错误", f"{slot}={value!r}", self)
        # canonical forms keep males first so each configuration has one spelling
        for value in (self.werewolf_pair, self.villager_triple):
            if value != "".join(sorted(value, reverse=True)):
                raise ConfigurationError("性别配置不是规范形式", value, self)

    @property
    def key(self) -> str:
        return f"{self.seer}{self.guard}-{self.werewolf_pair}-{self.villager_triple}"

    @classmethod
    def from_key(cls, key: str) -> "GenderConfig":
        try:
            head, wolves, villagers = key.split("-")
            seer, guard = head
        except ValueError:
            raise ConfigurationError("性别配置键错误", key)
        return cls(seer, guard, wolves, villagers)


@dataclass(frozen=True)
class PlayerProfile:
    seat: int
    role: Role
    true_gender: Gender
    proxy_name: str | None = None
    alive: bool = True


@dataclass(frozen=True)
class GameEvent:
    kind: EventKind
    actor: int | None = None
    target: int | None = None
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": str(self.kind),
            "actor": self.actor,
            "target": self.target,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "GameEvent":
        return cls(
            EventKind(data["kind"]),
            data.get("actor"),
            data.get("target"),
            dict(data.get("payload") or {}),
        )


@dataclass(frozen=True)
class SeerResult:
    target: int
    is_werewolf: bool

    @property
    def text(self) -> str:
        return f"Player {self.target} {'is' if self.is_werewolf else 'is not'} a Werewolf"


@dataclass(frozen=True)
class GameState:
    match_id: str
    round: int
    phase: Phase
    players: tuple[PlayerProfile, ...]
    sheriff: int | None
    events: tuple[GameEvent, ...]
    rng_seed: int
    winner: Winner | None = None
    round_cap: int = ROUND_CAP

    def player(self, seat: int) -> PlayerProfile:
        if seat not in SEATS:
            raise IllegalActionError("座位不存在", seat)
        return self.players[seat - 1]

    @property
    def alive(self) -> tuple[int, ...]:
        return tuple(p.seat for p in self.players if p.alive)

    def seats_with(self, role: Role, alive_only: bool = True) -> tuple[int, ...]:
        return tuple(
            p.seat for p in self.players if p.role is role and (p.alive or not alive_only)
        )

    def is_alive(self, seat: int) -> bool:
        return self.player(seat).alive

    @property
    def finished(self) -> bool:
        return self.phase is Phase.FINISHED

    @property
    def drawn(self) -> bool:
        return self.finished and self.winner is None

    def snapshot(self) -> dict:
        return {
            "match_id": self.match_id,
            "round": self.round,
            "phase": str(self.phase),
            "winner": self.winner and str(self.winner),
            "sheriff": self.sheriff,
            "players": [
                {
                    "seat": p.seat,
                    "role": str(p.role),
                    "gender": str(p.true_gender),
                    "name": p.proxy_name,
                    "alive": p.alive,
                }
                for p in self.players
            ],
            "events": [e.to_dict() for e in self.events],
        }


def state_hash(state: GameState) -> str:
    return sha256_hex(dumps(state.snapshot()))


def _require_phase(state: GameState, *phases: Phase) -> None:
    if state.phase not in phases:
        raise IllegalActionError(
            "当前阶段不允许该操作", f"{state.match_id} {state.phase}", phases
        )


def _require_alive(state: GameState, seat: int, what: str) -> None:
    if not state.is_alive(seat):
        raise IllegalActionError(f"{what}已死亡", f"{state.match_id} seat {seat}")


def _append(state: GameState, *events: GameEvent, **changes) -> GameState:
    return replace(state, events=state.events + events, **changes)


def _kill(state: GameState, seat: int, cause: str) -> GameState:
    players = tuple(replace(p, alive=False) if p.seat == seat else p for p in state.players)
    return _append(
        replace(state, players=players),
        GameEvent(EventKind.ELIMINATION, target=seat, payload={"cause": cause}),
    )


def _finish(state: GameState, winner: Winner) -> GameState:
    logger.info(f"对局结束: {state.match_id} 第{state.round}轮 胜方: {winner}")
    return _append(
        state,
        GameEvent(EventKind.WIN, payload={"winner": str(winner)}),
        phase=Phase.FINISHED,
        winner=winner,
    )


def new_game(
    config: GenderConfig | None,
    seed: int,
    name_assignment: NameAssignment | None = None,
    match_id: str = "",
    round_cap: int = ROUND_CAP,
) -> GameState:
    """Seat seven players with a seeded role shuffle.

    Genders come from ``config`` or, for name studies, from each assigned
    name. Slot genders within a role are shuffled with the same generator, so
    a mixed pair or triple does not always seat its male member first.
    """
    if name_assignment is None:
        if config is None:
            raise ConfigurationError("缺少性别配置", match_id)
        config.validate()
    rng = random.Random(seed)
    roles = list(STANDARD_ROLES)
    rng.shuffle(roles)
    if name_assignment is not None:
        genders = [name_assignment.gender_for(seat) for seat in SEATS]
    else:
        pools = {
            Role.SEER: list(config.seer),
            Role.GUARD: list(config.guard),
            Role.WEREWOLF: list(config.werewolf_pair),
            Role.VILLAGER: list(config.villager_triple),
        }
        for pool in pools.values():
            rng.shuffle(pool)
        genders = [Gender(pools[role].pop(0)) for role in roles]
    players = tuple(
        PlayerProfile(
            seat=seat,
            role=role,
            true_gender=gender,
            proxy_name=name_assignment.name_for(seat) if name_assignment else None,
        )
        for seat, role, gender in zip(SEATS, roles, genders)
    )
    events = tuple(
        GameEvent(
            EventKind.ROLE_ASSIGNED,
            actor=p.seat,
            payload={"role": str(p.role), "gender": str(p.true_gender), "name": p.proxy_name},
        )
        for p in players
    )
    return GameState(
        match_id=match_id,
        round=0,
        phase=Phase.SETUP,
        players=players,
        sheriff=None,
        events=events,
        rng_seed=seed,
        round_cap=round_cap,
    )


def start_election(state: GameState) -> GameState:
    _require_phase(state, Phase.SETUP)
    return replace(state, phase=Phase.SHERIFF_ELECTION)


def elect_sheriff(state: GameState, nominations: Mapping[int, int]) -> GameState:
    _require_phase(state, Phase.SHERIFF_ELECTION)
    alive = set(state.alive)
    if set(nominations) != alive:
        raise IllegalActionError("警长提名人不完整", state.match_id, sorted(nominations))
    for voter, nominee in nominations.items():
        _require_alive(state, voter, "提名人")
        _require_alive(state, nominee, "被提名人")
    tally = Counter(nominations.values())
    top = max(tally.values())
    sheriff = min(seat for seat, count in tally.items() if count == top)
    event = GameEvent(
        EventKind.SHERIFF_ELECTED,
        target=sheriff,
        payload={"nominations": {str(k): v for k, v in sorted(nominations.items())}},
    )
    return _append(state, event, sheriff=sheriff, phase=Phase.NIGHT, round=1)


def legal_targets(state: GameState, actor: int, verb: str) -> tuple[int, ...]:
    alive = state.alive
    if verb == "kill":
        return tuple(s for s in alive if state.player(s).role is not Role.WEREWOLF)
    if verb in ("protect", "nominate"):
        return alive
    if verb in ("see", "vote", "reliability"):
        return tuple(s for s in alive if s != actor)
    return ()


def resolve_night(
    state: GameState,
    kill_nominations: Sequence[tuple[int, int]],
    guard_target: int | None,
    seer_target: int | None,
) -> tuple[GameState, SeerResult | None]:
    _require_phase(state, Phase.NIGHT)
    if not kill_nominations:
        raise IllegalActionError("狼人未提名击杀目标", state.match_id)
    for wolf, target in kill_nominations:
        if state.player(wolf).role is not Role.WEREWOLF:
            raise IllegalActionError("非狼人提名击杀", f"{state.match_id} seat {wolf}")
        _require_alive(state, wolf, "狼人")
        _require_alive(state, target, "击杀目标")
        if state.player(target).role is Role.WEREWOLF:
            raise IllegalActionError("狼人不能击杀狼人", f"{state.match_id} seat {target}")
    # lower-seat nominator prevails on disagreement
    decider, kill_target = min(kill_nominations)
    events = [
        GameEvent(
            EventKind.NIGHT_KILL,
            actor=decider,
            target=kill_target,
            payload={"nominations": {str(w): t for w, t in sorted(kill_nominations)}},
        )
    ]
    guard = state.seats_with(Role.GUARD)
    if guard_target is not None:
        if not guard:
            raise IllegalActionError("守卫已死亡", state.match_id)
        _require_alive(state, guard_target, "守护目标")
        events.append(GameEvent(EventKind.NIGHT_PROTECT, actor=guard[0], target=guard_target))
    seer_result = None
    seer = state.seats_with(Role.SEER)
    if seer_target is not None:
        if not seer:
            raise IllegalActionError("预言家已死亡", state.match_id)
        _require_alive(state, seer_target, "查验目标")
        seer_result = SeerResult(
            seer_target, state.player(seer_target).role is Role.WEREWOLF
        )
        events.append(
            GameEvent(
                EventKind.NIGHT_SEE,
                actor=seer[0],
                target=seer_target,
                payload={"is_werewolf": seer_result.is_werewolf},
            )
        )
    state = _append(state, *events)
    killed = None if kill_target == guard_target else kill_target
    if killed is not None:
        state = _kill(state, killed, "night")
    text = (
        f"Player {killed} was killed last night."
        if killed is not None
        else "Last night, no one was killed."
    )
    dawn = GameEvent(EventKind.DAWN_ANNOUNCEMENT, target=killed, payload={"text": text})
    return _append(state, dawn, phase=Phase.DAY_ANNOUNCE), seer_result


def check_winner(state: GameState) -> Winner | None:
    roles = [p.role for p in state.players if p.alive]
    wolves = sum(role is Role.WEREWOLF for role in roles)
    if wolves == 0:
        return Winner.VILLAGER
    if wolves >= len(roles) - wolves:
        return Winner.WEREWOLF
    return None


def open_statements(state: GameState) -> GameState:
    _require_phase(state, Phase.DAY_ANNOUNCE)
    winner = check_winner(state)
    if winner is not None:
        return _finish(state, winner)
    return replace(state, phase=Phase.DAY_STATEMENTS)


def statement_order(state: GameState) -> list[int]:
    alive = sorted(state.alive)
    if not alive:
        return []
    anchor = state.sheriff if state.sheriff in alive else alive[0]
    after = [s for s in alive if s > anchor]
    return after + [s for s in alive if s <= anchor]


def record_statement(state: GameState, seat: int, text: str, summary: bool = False) -> GameState:
    _require_phase(state, Phase.DAY_STATEMENTS)
    _require_alive(state, seat, "发言人")
    payload = {"text": text, "summary": summary}
    return _append(state, GameEvent(EventKind.STATEMENT, actor=seat, payload=payload))


def record_reliability(
    state: GameState,
    seat: int,
    scores: Mapping[int, int],
    stage: str,
    intent: int | None = None,
) -> GameState:
    _require_phase(state, Phase.DAY_STATEMENTS, Phase.DAY_VOTE)
    _require_alive(state, seat, "评分人")
    if stage not in ("pre", "post"):
        raise ConsistencyError("可信度阶段错误", stage)
    payload = {
        "stage": stage,
        "scores": {str(k): v for k, v in sorted(scores.items())},
        "intent": intent,
    }
    return _append(state, GameEvent(EventKind.RELIABILITY_UPDATE, actor=seat, payload=payload))


def open_vote(state: GameState) -> GameState:
    _require_phase(state, Phase.DAY_STATEMENTS)
    return replace(state, phase=Phase.DAY_VOTE)


def run_day_vote(state: GameState, ballots: Mapping[int, int | None]) -> GameState:
    _require_phase(state, Phase.DAY_VOTE)
    for voter, target in ballots.items():
        _require_alive(state, voter, "投票人")
        if target is not None:
            _require_alive(state, target, "投票目标")
    state = _append(
        state,
        *(
            GameEvent(EventKind.VOTE, actor=voter, target=target)
            for voter, target in sorted(ballots.items())
        ),
    )
    tally = Counter(t for t in ballots.values() if t is not None)
    ranked = tally.most_common()
    if not ranked:
        state = _append(state, GameEvent(EventKind.DRAW, payload={"reason": "abstain"}))
    elif len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        state = _append(state, GameEvent(EventKind.DRAW, payload={"reason": "tie"}))
    else:
        state = _kill(state, ranked[0][0], "vote")
    winner = check_winner(state)
    if winner is not None:
        return _finish(state, winner)
    if state.round >= state.round_cap:
        logger.info(f"对局达到轮数上限: {state.match_id} 第{state.round}轮")
        return _append(
            state,
            GameEvent(EventKind.DRAW, payload={"reason": "round_cap"}),
            phase=Phase.FINISHED,
        )
    return replace(state, phase=Phase.NIGHT, round=state.round + 1)


def replay(
    config: GenderConfig | None,
    seed: int,
    name_assignment: NameAssignment | None,
    events: Iterable[GameEvent],
    match_id: str = "",
    round_cap: int = ROUND_CAP,
) -> GameState:
    """Re-drive every transition from a recorded log.

    Raises IntegrityError when the regenerated log is not the recorded one.
    """
    recorded = tuple(events)
    state = new_game(config, seed, name_assignment, match_id, round_cap)
    night: dict = {"kills": [], "guard": None, "seer": None}
    ballots: dict[int, int | None] = {}
    for event in recorded[len(state.events) :]:
        match event.kind:
            case EventKind.SHERIFF_ELECTED:
                if state.phase is Phase.SETUP:
                    state = start_election(state)
                nominations = {int(k): v for k, v in event.payload["nominations"].items()}
                state = elect_sheriff(state, nominations)
            case EventKind.NIGHT_KILL:
                night["kills"] = [(int(k), v) for k, v in event.payload["nominations"].items()]
            case EventKind.NIGHT_PROTECT:
                night["guard"] = event.target
            case EventKind.NIGHT_SEE:
                night["seer"] = event.target
            case EventKind.DAWN_ANNOUNCEMENT:
                state, _ = resolve_night(state, night["kills"], night["guard"], night["seer"])
                night = {"kills": [], "guard": None, "seer": None}
            case EventKind.STATEMENT:
                if state.phase is Phase.DAY_ANNOUNCE:
                    state = open_statements(state)
                state = record_statement(
                    state, event.actor, event.payload["text"], event.payload.get("summary", False)
                )
            case EventKind.RELIABILITY_UPDATE:
                if state.phase is Phase.DAY_ANNOUNCE:
                    state = open_statements(state)
                if event.payload["stage"] == "post" and state.phase is Phase.DAY_STATEMENTS:
                    state = open_vote(state)
                scores = {int(k): v for k, v in event.payload["scores"].items()}
                state = record_reliability(
                    state, event.actor, scores, event.payload["stage"], event.payload.get("intent")
                )
            case EventKind.VOTE:
                ballots[event.actor] = event.target
            case EventKind.ELIMINATION if event.payload.get("cause") == "vote":
                state = _replay_vote(state, ballots)
                ballots = {}
            case EventKind.DRAW if event.payload.get("reason") in ("tie", "abstain"):
                state = _replay_vote(state, ballots)
                ballots = {}
            case EventKind.WIN if state.phase is Phase.DAY_ANNOUNCE:
                state = open_statements(state)
            case _:
                # produced as a side effect of the transitions above
                pass
    if state.events != recorded:
        diverged = next(
            (i for i, (a, b) in enumerate(zip(state.events, recorded)) if a != b),
            min(len(state.events), len(recorded)),
        )
        raise IntegrityError("回放事件不一致", f"{match_id} event #{diverged}")
    return state


def _replay_vote(state: GameState, ballots: Mapping[int, int | None]) -> GameState:
    if state.phase is Phase.DAY_ANNOUNCE:
        state = open_statements(state)
    if state.phase is Phase.DAY_STATEMENTS:
        state = open_vote(state)
    return run_day_vote(state, ballots)
