"""Prompt rendering under the gender-presentation templates.

Every prompt is three blocks (game rules, contextual information, task
description) rendered from versioned jinja2 files under ``templates/``.
Context and task text refer to players only as ``Player i``; the
PresentationMap then decides how each reference is decorated, so gender or
name tokens appear exactly where the template asks for them. Quoted speech
goes through ``neutral_speech`` first, in every arm.
"""

import re
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Iterable, Mapping

from jinja2 import Environment, PackageLoader, StrictUndefined

from ..game import (
    DecisionKind,
    GameState,
    Phase,
    PlayerProfile,
    Role,
    decision_verb,
    legal_targets,
)
from ..roster import Gender, name_roster
from ..utils import TRUTH_THRESHOLD, ConfigurationError, ConsistencyError, sha256_hex

if TYPE_CHECKING:
    from ..agent.context import ContextPacket

__all__ = [
    "TEMPLATE_VERSION",
    "DENYLIST",
    "TemplateId",
    "PresentationKind",
    "Presentation",
    "PresentationMap",
    "DecisionView",
    "PromptText",
    "presentation_for",
    "render_prompt",
    "name_roster",
    "gender_tokens",
    "neutral_speech",
    "label",
]

TEMPLATE_VERSION = "v1"

DENYLIST = frozenset(
    {
        "male", "males", "female", "females",
        "man", "men", "man's", "men's",
        "woman", "women", "woman's", "women's",
        "he", "she", "his", "her", "hers", "him",
        "himself", "herself", "he's", "she's",
    }
)

_TOKEN = re.compile(r"[a-z]+(?:'[a-z]+)?")
# a player reference, with any decoration a previous rendering may have left on it
_PLAYER_REF = re.compile(r"\b[Pp]layer (\d+)(?: \((?i:male|female)\)|, named [A-Z][a-z]+)?")

# gender words in quoted speech and their neutral replacements
_NEUTRAL = {
    "male": "player", "males": "players", "female": "player", "females": "players",
    "man": "person", "men": "people", "man's": "person's", "men's": "people's",
    "woman": "person", "women": "people", "woman's": "person's", "women's": "people's",
    "he": "they", "she": "they", "his": "their", "her": "them", "hers": "theirs", "him": "them",
    "himself": "themselves", "herself": "themselves", "he's": "they're", "she's": "they're",
}
_SPEECH_WORD = re.compile(
    r"\b(?:" + "|".join(re.escape(w) for w in sorted(_NEUTRAL, key=len, reverse=True)) + r")\b",
    re.IGNORECASE,
)
_ROSTER_NAME = re.compile(r"\b(?:" + "|".join(name for name, _ in name_roster()) + r")\b")

_env = Environment(
    loader=PackageLoader("wolfaudit", f"prompts/templates/{TEMPLATE_VERSION}"),
    undefined=StrictUndefined,
    autoescape=False,
)


class TemplateId(StrEnum):
    T1_NO_GENDER = "T1_NoGender"
    T2_SELF_GENDER = "T2_SelfGender"
    T3_SELF_GENDER_REVERSED = "T3_SelfGenderReversed"
    T4_OTHERS_SWAPPED = "T4_OthersSwapped"
    T5_NAME_PROXY = "T5_NameProxy"


class PresentationKind(StrEnum):
    HIDDEN = "Hidden"
    AS_MALE = "AsMale"
    AS_FEMALE = "AsFemale"
    AS_NAME = "AsName"


@dataclass(frozen=True)
class Presentation:
    kind: PresentationKind
    name: str | None = None

    @classmethod
    def of_gender(cls, gender: Gender) -> "Presentation":
        return cls(PresentationKind.AS_MALE if gender is Gender.MALE else PresentationKind.AS_FEMALE)

    @property
    def gender(self) -> Gender | None:
        """Gender shown explicitly; names and hidden entries show none."""
        return {
            PresentationKind.AS_MALE: Gender.MALE,
            PresentationKind.AS_FEMALE: Gender.FEMALE,
        }.get(self.kind)


HIDDEN = Presentation(PresentationKind.HIDDEN)


@dataclass(frozen=True)
class PresentationMap:
    entries: tuple[tuple[int, Presentation], ...]

    @classmethod
    def build(cls, entries: Mapping[int, Presentation]) -> "PresentationMap":
        return cls(tuple(sorted(entries.items())))

    def __getitem__(self, seat: int) -> Presentation:
        for s, presentation in self.entries:
            if s == seat:
                return presentation
        raise KeyError(seat)

    def __contains__(self, seat: int) -> bool:
        return any(s == seat for s, _ in self.entries)

    def seats_presented_as(self, gender: Gender) -> tuple[int, ...]:
        return tuple(s for s, p in self.entries if p.gender is gender)

    def to_dict(self) -> dict[str, str]:
        return {
            str(s): p.name if p.kind is PresentationKind.AS_NAME else str(p.kind)
            for s, p in self.entries
        }


def label(seat: int, presentation: Presentation) -> str:
    match presentation.kind:
        case PresentationKind.AS_MALE:
            return f"Player {seat} (male)"
        case PresentationKind.AS_FEMALE:
            return f"Player {seat} (female)"
        case PresentationKind.AS_NAME:
            return f"Player {seat}, named {presentation.name}"
    return f"Player {seat}"


def gender_tokens(text: str) -> list[str]:
    return [token for token in _TOKEN.findall(text.lower()) if token in DENYLIST]


def presentation_for(
    template: TemplateId, actor: int, profiles: Iterable[PlayerProfile]
) -> PresentationMap:
    profiles = list(profiles)
    if actor not in {p.seat for p in profiles}:
        raise ConfigurationError("呈现映射缺少行动者", actor)
    roster = {name for name, _ in name_roster()}
    entries = {}
    for p in profiles:
        match template:
            case TemplateId.T1_NO_GENDER:
                entries[p.seat] = HIDDEN
            case TemplateId.T2_SELF_GENDER:
                entries[p.seat] = Presentation.of_gender(p.true_gender)
            case TemplateId.T3_SELF_GENDER_REVERSED:
                gender = p.true_gender.opposite if p.seat == actor else p.true_gender
                entries[p.seat] = Presentation.of_gender(gender)
            case TemplateId.T4_OTHERS_SWAPPED:
                gender = p.true_gender if p.seat == actor else p.true_gender.opposite
                entries[p.seat] = Presentation.of_gender(gender)
            case TemplateId.T5_NAME_PROXY:
                if p.proxy_name not in roster:
                    raise ConfigurationError("玩家没有分配名字", p.seat, p.proxy_name)
                entries[p.seat] = Presentation(PresentationKind.AS_NAME, p.proxy_name)
    return PresentationMap.build(entries)


@dataclass(frozen=True)
class DecisionView:
    """Structured side of a prompt; scripted backends decide from this."""

    actor: int
    role: Role
    kind: DecisionKind
    verb: str
    legal_targets: tuple[int, ...]
    alive: tuple[int, ...]
    presentation: PresentationMap
    summary: bool = False

    @property
    def others(self) -> tuple[int, ...]:
        return tuple(s for s in self.alive if s != self.actor)


@dataclass(frozen=True)
class PromptText:
    system_rules: str
    context_block: str
    task_block: str
    rendered: str
    content_hash: str
    view: DecisionView = field(compare=False)

    def with_note(self, note: str) -> "PromptText":
        task_block = f"{self.task_block}\n\n{note}"
        rendered = _join(self.system_rules, self.context_block, task_block)
        return PromptText(
            self.system_rules,
            self.context_block,
            task_block,
            rendered,
            sha256_hex(rendered),
            self.view,
        )


def _join(*blocks: str) -> str:
    return "\n\n".join(block.strip() for block in blocks) + "\n"


def _decorate(text: str, pm: PresentationMap) -> str:
    def sub(match: re.Match) -> str:
        seat = int(match.group(1))
        return label(seat, pm[seat]) if seat in pm else f"Player {seat}"

    return _PLAYER_REF.sub(sub, text)


def neutral_speech(text: str) -> str:
    """Quoted speech with decorations, gender words and roster names removed.

    Player references in the result are bare, so ``_decorate`` labels them
    the way the arm's PresentationMap says.
    """

    def word(match: re.Match) -> str:
        found = match.group(0)
        neutral = _NEUTRAL[found.lower()]
        return neutral.capitalize() if found[0].isupper() else neutral

    text = _PLAYER_REF.sub(lambda m: f"Player {m.group(1)}", text)
    text = _SPEECH_WORD.sub(word, text)
    return _ROSTER_NAME.sub("a player", text)


def _action_hint(verb: str) -> str:
    return {
        "kill": "kill <seat number>",
        "protect": "protect <seat number>",
        "see": "see <seat number>",
        "vote": "vote <seat number> | abstain",
        "reliability": "vote <seat number> | abstain",
        "nominate": "vote <seat number>",
        "statement": "statement <your statement on one line>",
    }[verb]


def render_prompt(
    state: GameState,
    actor: int,
    task: DecisionKind,
    pm: PresentationMap,
    context: "ContextPacket",
    summary: bool = False,
) -> PromptText:
    player = state.player(actor)
    if not player.alive:
        raise ConsistencyError("行动者已死亡", f"{state.match_id} seat {actor}")
    seats = {p.seat for p in state.players}
    alive = state.alive
    for seat in alive:
        if seat not in pm:
            raise ConsistencyError("呈现映射未覆盖存活玩家", f"{state.match_id} seat {seat}")
    referenced = [s for s, _ in context.potential_truths + context.potential_falsehoods]
    referenced += list(context.reliability.scores)
    for seat in referenced:
        if seat not in seats:
            raise ConsistencyError("上下文引用了不存在的玩家", f"{state.match_id} seat {seat}")
    for seat in context.reliability.scores:
        if seat not in alive:
            raise ConsistencyError("可信度引用了已死亡玩家", f"{state.match_id} seat {seat}")

    verb = decision_verb(player.role, task)
    targets = legal_targets(state, actor, verb)
    others = [s for s in alive if s != actor]
    rules = _env.get_template("rules.j2").render(threshold=TRUTH_THRESHOLD)
    context_block = _env.get_template("context.j2").render(
        me=f"Player {actor}",
        role=player.role,
        night=state.phase is Phase.NIGHT,
        round=state.round,
        sheriff=f"Player {state.sheriff}" if state.sheriff in alive else None,
        alive=[f"Player {s}" for s in alive],
        dead=[f"Player {p.seat}" for p in state.players if not p.alive],
        facts=context.facts,
        truths=[(s, neutral_speech(text)) for s, text in context.potential_truths],
        falsehoods=[(s, neutral_speech(text)) for s, text in context.potential_falsehoods],
        reliability=sorted(context.reliability.scores.items()),
    )
    task_block = _env.get_template("task.j2").render(
        verb=verb,
        summary=summary,
        targets=[f"Player {s}" for s in targets] if verb not in ("statement", "reliability") else [],
        action_hint=_action_hint(verb),
        reliability_hint=",".join(f"{s}=<0-10>" for s in others),
    )
    context_block = _decorate(context_block, pm)
    task_block = _decorate(task_block, pm)
    rendered = _join(rules, context_block, task_block)
    view = DecisionView(
        actor=actor,
        role=player.role,
        kind=task,
        verb=verb,
        legal_targets=targets,
        alive=alive,
        presentation=pm,
        summary=summary,
    )
    return PromptText(rules.strip(), context_block.strip(), task_block.strip(), rendered, sha256_hex(rendered), view)
