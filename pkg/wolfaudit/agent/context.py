from dataclasses import dataclass, field
from enum import StrEnum

from ..game import EventKind, GameState, Role
from ..utils import SCORE_MAX, SCORE_MIN, TRUTH_THRESHOLD, ReplyValidationError
from .reply import ReliabilityVector


class StatementClass(StrEnum):
    POTENTIAL_TRUTH = "PotentialTruth"
    POTENTIAL_FALSEHOOD = "PotentialFalsehood"


def classify_statement(score: int) -> StatementClass:
    if not SCORE_MIN <= score <= SCORE_MAX:
        raise ReplyValidationError("可信度超出范围", score)
    if score >= TRUTH_THRESHOLD:
        return StatementClass.POTENTIAL_TRUTH
    return StatementClass.POTENTIAL_FALSEHOOD


@dataclass(frozen=True)
class ContextPacket:
    facts: tuple[str, ...] = ()
    potential_truths: tuple[tuple[int, str], ...] = ()
    potential_falsehoods: tuple[tuple[int, str], ...] = ()
    reliability: ReliabilityVector = field(default_factory=ReliabilityVector)
    # number of state events already folded in
    seen: int = 0


def _facts(state: GameState, actor: int) -> list[str]:
    me = state.player(actor)
    facts = [f"You are Player {actor} and your role is {me.role}."]
    if me.role is Role.WEREWOLF:
        mates = [s for s in state.seats_with(Role.WEREWOLF, alive_only=False) if s != actor]
        facts += [f"Player {s} is your fellow Werewolf." for s in mates]
    for event in state.events:
        match event.kind:
            case EventKind.SHERIFF_ELECTED:
                facts.append(f"Player {event.target} was elected Sheriff.")
            case EventKind.NIGHT_KILL if me.role is Role.WEREWOLF:
                facts.append(f"Your team chose to kill Player {event.target}.")
            case EventKind.NIGHT_PROTECT if event.actor == actor:
                facts.append(f"You protected Player {event.target}.")
            case EventKind.NIGHT_SEE if event.actor == actor:
                verdict = "is" if event.payload.get("is_werewolf") else "is not"
                facts.append(f"You checked Player {event.target}: that player {verdict} a Werewolf.")
            case EventKind.DAWN_ANNOUNCEMENT:
                facts.append(event.payload["text"])
            case EventKind.ELIMINATION if event.payload.get("cause") == "vote":
                facts.append(f"Player {event.target} was eliminated by vote.")
            case EventKind.DRAW if event.payload.get("reason") in ("tie", "abstain"):
                facts.append("The vote produced no elimination.")
    return facts


def _latest_reliability(state: GameState, actor: int, prior: ReliabilityVector) -> ReliabilityVector:
    for event in reversed(state.events):
        if event.kind is EventKind.RELIABILITY_UPDATE and event.actor == actor:
            return ReliabilityVector.from_dict(event.payload["scores"])
    return prior


def build_context(state: GameState, actor: int, prior: ContextPacket | None = None) -> ContextPacket:
    """Fold the public log and the actor's private results into a context.

    Statements by other players are re-classified under the actor's current
    reliability scores every time; unscored speakers count as neutral.
    """
    prior = prior or ContextPacket()
    if prior.seen == len(state.events):
        return prior
    others = [s for s in state.alive if s != actor]
    latest = _latest_reliability(state, actor, prior.reliability)
    reliability = ReliabilityVector({s: latest.get(s) for s in others})
    truths, falsehoods = [], []
    for event in state.events:
        if event.kind is not EventKind.STATEMENT or event.actor == actor:
            continue
        entry = (event.actor, event.payload["text"])
        if classify_statement(latest.get(event.actor)) is StatementClass.POTENTIAL_TRUTH:
            truths.append(entry)
        else:
            falsehoods.append(entry)
    return ContextPacket(
        facts=tuple(_facts(state, actor)),
        potential_truths=tuple(truths),
        potential_falsehoods=tuple(falsehoods),
        reliability=reliability,
        seen=len(state.events),
    )
