import pytest

from wolfaudit.agent import (
    MARKER,
    Action,
    AgentBackend,
    ReliabilityVector,
    ScriptedBackend,
    StatementClass,
    build_context,
    classify_statement,
    decide,
    format_reply,
    make_backend,
    parse_reply,
    scripted_policy,
)
from wolfaudit.agent.scripted import FEMALE_TRUST, MALE_TRUST, PolicyId
from wolfaudit.game import (
    DecisionKind,
    GenderConfig,
    Role,
    elect_sheriff,
    new_game,
    open_statements,
    record_reliability,
    record_statement,
    resolve_night,
    start_election,
    statement_order,
)
from wolfaudit.prompts import (
    HIDDEN,
    DecisionView,
    Presentation,
    PresentationMap,
    TemplateId,
    presentation_for,
    render_prompt,
)
from wolfaudit.roster import Gender
from wolfaudit.utils import ConfigurationError, ReplyParseError, ReplyValidationError

ALIVE = (1, 2, 3, 4, 5, 6, 7)


def _view(verb="vote", kind=DecisionKind.VOTE, actor=1, legal=(2, 3, 6), females=(), hidden=False):
    entries = {
        seat: HIDDEN if hidden else Presentation.of_gender(Gender.FEMALE if seat in females else Gender.MALE)
        for seat in ALIVE
    }
    return DecisionView(
        actor=actor,
        role=Role.VILLAGER,
        kind=kind,
        verb=verb,
        legal_targets=legal,
        alive=ALIVE,
        presentation=PresentationMap.build(entries),
    )


def _statements():
    state = start_election(new_game(GenderConfig.from_key("MF-MF-MMF"), 2, match_id="a"))
    state = elect_sheriff(state, {seat: 7 for seat in state.alive})
    guard = state.seats_with(Role.GUARD)[0]
    wolf = state.seats_with(Role.WEREWOLF)[0]
    state, _ = resolve_night(state, [(wolf, guard)], guard, None)
    state = open_statements(state)
    for seat in statement_order(state):
        state = record_statement(state, seat, f"I am Player {seat}.")
    return state


def test_classify_boundaries():
    assert classify_statement(0) is StatementClass.POTENTIAL_FALSEHOOD
    assert classify_statement(5) is StatementClass.POTENTIAL_FALSEHOOD
    assert classify_statement(6) is StatementClass.POTENTIAL_TRUTH
    assert classify_statement(10) is StatementClass.POTENTIAL_TRUTH
    for score in (-1, 11):
        with pytest.raises(ReplyValidationError):
            classify_statement(score)


def test_classify_is_monotone():
    classes = [classify_statement(score) is StatementClass.POTENTIAL_TRUTH for score in range(11)]
    assert classes == sorted(classes)


def test_reply_format_parses_back():
    reliability = ReliabilityVector({s: s for s in ALIVE if s != 1})
    raw = "thinking aloud\n" + format_reply(Action("vote", 4), reliability, "Player 4 hedged")
    reply = parse_reply(raw, DecisionKind.VOTE, ALIVE, owner=1, verb="vote")
    assert reply.action == Action("vote", 4)
    assert reply.reliability == reliability
    assert reply.reasoning == "Player 4 hedged"
    assert not reply.fallback


def test_parse_takes_last_block():
    first = format_reply(Action("kill", 3), ReliabilityVector(), "first")
    last = format_reply(Action("kill", 5), ReliabilityVector(), "second")
    reply = parse_reply(first + last, DecisionKind.SKILL, ALIVE, owner=1, verb="kill")
    assert reply.action.target == 5


def test_parse_abstain_and_statement():
    scores = ",".join(f"{s}=5" for s in ALIVE if s != 2)
    reply = parse_reply(
        f"{MARKER}\naction: abstain\nreliability: {scores}\n", DecisionKind.RELIABILITY, ALIVE, owner=2
    )
    assert reply.action.decision is None
    reply = parse_reply(
        f"{MARKER}\naction: statement I saw nothing.\nreliability:\n", DecisionKind.STATEMENT, ALIVE
    )
    assert reply.action.text == "I saw nothing."


@pytest.mark.parametrize(
    "raw, error",
    [
        ("no block at all", ReplyParseError),
        (f"{MARKER}\naction: vote 3\n", ReplyParseError),
        (f"{MARKER}\naction: dance 3\nreliability: 3=5\n", ReplyParseError),
        (f"{MARKER}\naction: vote 3\nreliability: 3=17\n", ReplyValidationError),
        (f"{MARKER}\naction: vote 9\nreliability: 3=5\n", ReplyValidationError),
        (f"{MARKER}\naction: kill 3\nreliability: 3=5\n", ReplyValidationError),
    ],
)
def test_parse_rejects(raw, error):
    with pytest.raises(error):
        parse_reply(raw, DecisionKind.SKILL, ALIVE, owner=1, verb="vote")


def test_parse_rejects_dead_and_illegal_targets():
    raw = format_reply(Action("kill", 4), ReliabilityVector(), "")
    with pytest.raises(ReplyValidationError):
        parse_reply(raw, DecisionKind.SKILL, (1, 2, 3, 5), owner=1, verb="kill")
    with pytest.raises(ReplyValidationError):
        parse_reply(raw, DecisionKind.SKILL, ALIVE, owner=1, verb="kill", legal=(2, 3))


def test_vote_reply_must_score_everyone():
    raw = format_reply(Action("vote", 4), ReliabilityVector({4: 2}), "")
    with pytest.raises(ReplyValidationError):
        parse_reply(raw, DecisionKind.VOTE, ALIVE, owner=1, verb="vote")


def _parsed(policy, view):
    raw = scripted_policy(policy, view)
    return parse_reply(raw, view.kind, view.alive, owner=view.actor, verb=view.verb, legal=view.legal_targets)


def test_female_target_bias_picks_lowest_female():
    reply = _parsed(PolicyId.FEMALE_TARGET_BIAS, _view(females=(3, 6)))
    assert reply.action == Action("vote", 3)
    reply = _parsed(PolicyId.FEMALE_TARGET_BIAS, _view(females=()))
    assert reply.action == Action("vote", 2)


def test_male_trust_bias_scores():
    reply = _parsed(PolicyId.MALE_TRUST_BIAS, _view(kind=DecisionKind.RELIABILITY, verb="reliability", females=(4,)))
    assert reply.reliability.get(4) == FEMALE_TRUST
    assert reply.reliability.get(2) == MALE_TRUST
    hidden = _parsed(PolicyId.MALE_TRUST_BIAS, _view(kind=DecisionKind.RELIABILITY, verb="reliability", hidden=True))
    assert set(hidden.reliability.scores.values()) == {5}


def test_gender_blind_ignores_presentation():
    state = _statements()
    actor = state.alive[0]
    context = build_context(state, actor)
    replies = []
    for template in (TemplateId.T2_SELF_GENDER, TemplateId.T4_OTHERS_SWAPPED):
        pm = presentation_for(template, actor, state.players)
        prompt = render_prompt(state, actor, DecisionKind.RELIABILITY, pm, context)
        replies.append(_parsed(PolicyId.GENDER_BLIND, prompt.view))
    assert replies[0].action == replies[1].action
    assert replies[0].reliability == replies[1].reliability


class QueueBackend(AgentBackend):
    name = "queue"

    def __init__(self, *replies: str):
        self.replies = list(replies)
        self.prompts = []

    async def respond(self, prompt, kind):
        self.prompts.append(prompt)
        return self.replies.pop(0)


def _vote_prompt():
    state = _statements()
    actor = state.alive[0]
    pm = presentation_for(TemplateId.T1_NO_GENDER, actor, state.players)
    return render_prompt(state, actor, DecisionKind.VOTE, pm, build_context(state, actor))


@pytest.mark.asyncio
async def test_decide_accepts_first_valid_reply():
    prompt = _vote_prompt()
    good = scripted_policy(PolicyId.GENDER_BLIND, prompt.view)
    backend = QueueBackend(good)
    reply = await decide(backend, prompt, DecisionKind.VOTE)
    assert reply.action.target == prompt.view.legal_targets[0]
    assert len(backend.prompts) == 1


@pytest.mark.asyncio
async def test_decide_reprompts_once():
    prompt = _vote_prompt()
    good = scripted_policy(PolicyId.GENDER_BLIND, prompt.view)
    backend = QueueBackend("I refuse.", good)
    reply = await decide(backend, prompt, DecisionKind.VOTE)
    assert not reply.fallback
    assert backend.prompts[0] == prompt
    assert "could not be used" in backend.prompts[1].task_block
    assert backend.prompts[1].content_hash != prompt.content_hash


@pytest.mark.asyncio
async def test_decide_falls_back():
    prompt = _vote_prompt()
    backend = QueueBackend("nope", "still nope")
    reply = await decide(backend, prompt, DecisionKind.VOTE)
    assert reply.fallback
    assert reply.action.verb == "abstain"
    assert reply.raw == "still nope"
    assert set(reply.reliability.scores) == set(prompt.view.others)


def test_build_context_sorts_statements_by_reliability():
    state = _statements()
    actor, trusted, doubted = state.alive[:3]
    others = [s for s in state.alive if s != actor]
    scores = {s: 5 for s in others} | {trusted: 8}
    state = record_reliability(state, actor, scores, "pre")
    context = build_context(state, actor)
    assert (trusted, f"I am Player {trusted}.") in context.potential_truths
    assert (doubted, f"I am Player {doubted}.") in context.potential_falsehoods
    assert all(seat != actor for seat, _ in context.potential_truths + context.potential_falsehoods)
    assert context.reliability.get(trusted) == 8
    assert "Last night, no one was killed." in context.facts


def test_build_context_fixed_point():
    state = _statements()
    actor = state.alive[1]
    context = build_context(state, actor)
    assert build_context(state, actor, context) is context
    state = record_statement(state, actor, "One more thing.")
    assert build_context(state, actor, context).seen == len(state.events)


def test_make_backend():
    backend = make_backend("gender-blind")
    assert isinstance(backend, ScriptedBackend)
    assert backend.describe() == {"backend": "gender-blind"}
    with pytest.raises(ConfigurationError):
        make_backend("oracle")
