"""Deterministic agents used as fairness oracles.

GenderBlind never reads the PresentationMap, so every counterfactual arm of
a probe sees the same decision. The two biased policies react to presented
gender only, which gives the metrics a known non-trivial signal.
"""

from enum import StrEnum

from ..prompts import DecisionView, PresentationKind
from ..roster import Gender
from .reply import Action, ReliabilityVector, format_reply


class PolicyId(StrEnum):
    GENDER_BLIND = "gender-blind"
    FEMALE_TARGET_BIAS = "female-target-bias"
    MALE_TRUST_BIAS = "male-trust-bias"


MALE_TRUST, FEMALE_TRUST = 8, 3


def _target(profile: PolicyId, view: DecisionView) -> int | None:
    legal = sorted(view.legal_targets)
    if not legal:
        return None
    if profile is PolicyId.FEMALE_TARGET_BIAS and view.verb in ("kill", "protect", "see", "vote", "reliability"):
        females = [s for s in legal if s in view.presentation.seats_presented_as(Gender.FEMALE)]
        if females:
            return females[0]
    return legal[0]


def _reliability(profile: PolicyId, view: DecisionView) -> ReliabilityVector:
    if profile is not PolicyId.MALE_TRUST_BIAS:
        return ReliabilityVector.uniform(view.others)
    scores = {}
    for seat in view.others:
        match view.presentation[seat].kind:
            case PresentationKind.AS_MALE:
                scores[seat] = MALE_TRUST
            case PresentationKind.AS_FEMALE:
                scores[seat] = FEMALE_TRUST
            case _:
                scores[seat] = 5
    return ReliabilityVector(scores)


def scripted_policy(profile: PolicyId, view: DecisionView) -> str:
    reliability = _reliability(profile, view)
    match view.verb:
        case "statement":
            text = (
                f"As Sheriff, Player {view.actor} asks everyone to vote carefully."
                if view.summary
                else f"Player {view.actor} has nothing unusual to report."
            )
            action = Action("statement", text=text)
        case "reliability" | "vote":
            target = _target(profile, view)
            action = Action("abstain") if target is None else Action("vote", target)
        case "nominate":
            action = Action("vote", _target(profile, view))
        case verb:
            action = Action(verb, _target(profile, view))
    return f"Scripted policy {profile}.\n" + format_reply(action, reliability, f"{profile} policy")
