from fractions import Fraction

from wolfaudit import metrics
from wolfaudit.agent import Action, AgentReply, ReliabilityVector
from wolfaudit.game import DecisionKind, EventKind, GameEvent, Role
from wolfaudit.harness import DecisionProbe, ProbeArm
from wolfaudit.metrics import ALL_DAYS
from wolfaudit.prompts import TemplateId
from wolfaudit.roster import Gender
from wolfaudit.transcript import Transcript, load_run

VOTE = DecisionKind.VOTE


def _reply(target):
    return AgentReply("", "", ReliabilityVector(), Action("vote", target))


def _probe(n, gender=Gender.MALE, day=1, role=Role.VILLAGER, **arms):
    return DecisionProbe(
        match_id=f"m{n}",
        day=day,
        actor=1,
        kind=VOTE,
        role=role,
        actor_gender=gender,
        canonical=TemplateId.T2_SELF_GENDER,
        variants={TemplateId[k]: ProbeArm(TemplateId[k], k, _reply(v)) for k, v in arms.items()},
    )


def _changed(n, gender, changed, day=1):
    return _probe(n, gender, day, T1_NO_GENDER=3, T2_SELF_GENDER=4 if changed else 3)


def _row(rows, scenario=VOTE, role=Role.VILLAGER, day=ALL_DAYS):
    return next(r for r in rows if r.scenario is scenario and r.role is role and r.day == day)


def test_task1_decomposition():
    probes = (
        [_changed(i, Gender.MALE, False) for i in range(3)]
        + [_changed(i, Gender.MALE, True) for i in range(3, 5)]
        + [_changed(i, Gender.FEMALE, False) for i in range(5, 9)]
        + [_changed(9, Gender.FEMALE, True)]
    )
    rows = metrics.freq_task1(metrics.delta_samples(probes))
    row = next(r for r in rows if r.report.scenario is VOTE and r.report.role is Role.VILLAGER and r.report.day == ALL_DAYS)
    assert row.report.count == 10
    assert row.report.freq == Fraction(3, 10)
    d = row.decomposition
    assert (d.male_kept, d.female_kept, d.male_changed, d.female_changed) == (
        Fraction(3, 10),
        Fraction(4, 10),
        Fraction(2, 10),
        Fraction(1, 10),
    )
    assert d.total == 1


def test_task1_extremes():
    unchanged = metrics.freq_task1(metrics.delta_samples([_changed(i, Gender.MALE, False) for i in range(4)]))
    row = next(r for r in unchanged if r.report.role is Role.VILLAGER and r.report.scenario is VOTE and r.report.day == "1")
    assert row.report.freq == 0
    assert row.decomposition.male_kept == 1
    changed = metrics.freq_task1(metrics.delta_samples([_changed(i, Gender.FEMALE, True) for i in range(4)]))
    row = next(r for r in changed if r.report.role is Role.VILLAGER and r.report.scenario is VOTE and r.report.day == "1")
    assert row.report.freq == 1
    assert row.decomposition.female_changed == 1


def test_empty_cells_are_undefined():
    rows = metrics.freq_task3([])
    assert rows
    assert all(r.count == 0 and r.freq is None for r in rows)
    roles = {r.role for r in rows if r.scenario is DecisionKind.SKILL}
    assert Role.VILLAGER not in roles


def test_day_buckets():
    probes = [_probe(i, day=day, T2_SELF_GENDER=3, T4_OTHERS_SWAPPED=3) for i, day in enumerate((1, 2, 5, 7))]
    rows = metrics.freq_task3(metrics.theta_samples(probes))
    assert _row(rows, day="4+").count == 2
    assert _row(rows, day="3").count == 0
    assert _row(rows).count == 4


def test_task3_frequency():
    probes = [
        _probe(1, T2_SELF_GENDER=3, T4_OTHERS_SWAPPED=3),
        _probe(2, T2_SELF_GENDER=3, T4_OTHERS_SWAPPED=5),
        _probe(3, T2_SELF_GENDER=3),
    ]
    assert _row(metrics.freq_task3(metrics.theta_samples(probes))).freq == Fraction(1, 2)


def test_task2_similarity():
    probes = [
        _probe(1, T1_NO_GENDER=3, T2_SELF_GENDER=3, T3_SELF_GENDER_REVERSED=4),
        _probe(2, Gender.FEMALE, T1_NO_GENDER=3, T2_SELF_GENDER=3, T3_SELF_GENDER_REVERSED=4),
    ]
    male = metrics.freq_task2(metrics.gamma_samples(probes, Gender.MALE), Gender.MALE)
    assert _row(male).group == "male"
    assert _row(male).freq == Fraction(1, 2)


def test_closeness_tally():
    probes = [
        _probe(1, T1_NO_GENDER=3, T2_SELF_GENDER=3, T3_SELF_GENDER_REVERSED=4),
        _probe(2, T1_NO_GENDER=3, T2_SELF_GENDER=3, T3_SELF_GENDER_REVERSED=4),
        _probe(3, T1_NO_GENDER=3, T2_SELF_GENDER=4, T3_SELF_GENDER_REVERSED=3),
        _probe(4, T1_NO_GENDER=3, T2_SELF_GENDER=4, T3_SELF_GENDER_REVERSED=3),
        _probe(5, T1_NO_GENDER=3, T2_SELF_GENDER=3, T3_SELF_GENDER_REVERSED=3),
    ]
    row = _row(metrics.closeness_tally(probes))
    assert row.count == 5
    assert (row.male, row.female, row.neither) == (Fraction(2, 5), Fraction(2, 5), Fraction(1, 5))


def test_accumulator_merge():
    samples = metrics.delta_samples(
        [_changed(i, g, i % 3 == 0, day=i % 5 + 1) for i in range(30) for g in Gender]
    )
    whole = metrics.accumulate(samples)
    merged = metrics.accumulate(samples[:11]).merge(metrics.accumulate(samples[11:]))
    assert merged.totals == whole.totals
    assert metrics.FreqAccumulator().merge(whole).totals == whole.totals


def test_freq_by_name():
    probe = DecisionProbe(
        "n", 1, 1, VOTE, Role.GUARD, Gender.FEMALE, TemplateId.T5_NAME_PROXY,
        {
            TemplateId.T1_NO_GENDER: ProbeArm(TemplateId.T1_NO_GENDER, "a", _reply(3)),
            TemplateId.T5_NAME_PROXY: ProbeArm(TemplateId.T5_NAME_PROXY, "b", _reply(4)),
        },
        actor_name="Mildred",
    )
    rows = metrics.freq_by_name(metrics.delta_samples([probe]))
    mildred = next(r for r in rows if r.group == "Mildred" and r.role is Role.GUARD and r.scenario is VOTE and r.day == ALL_DAYS)
    assert mildred.freq == 1
    assert {r.group for r in rows} == {"Scott", "Timothy", "Kenneth", "Keith", "Judith", "Mildred", "Elizabeth"}


CAST = [
    (Role.SEER, "M"),
    (Role.GUARD, "F"),
    (Role.WEREWOLF, "M"),
    (Role.WEREWOLF, "F"),
    (Role.VILLAGER, "M"),
    (Role.VILLAGER, "M"),
    (Role.VILLAGER, "F"),
]


def _event(kind, actor=None, target=None, **payload):
    return GameEvent(kind, actor, target, payload)


def _reliability(seat, stage, scores, intent):
    return _event(
        EventKind.RELIABILITY_UPDATE,
        seat,
        stage=stage,
        scores={str(k): v for k, v in scores.items()},
        intent=intent,
    )


def _transcript(events, status="finished", winner="Villager"):
    cast = [
        _event(EventKind.ROLE_ASSIGNED, seat, role=str(role), gender=gender, name=None)
        for seat, (role, gender) in enumerate(CAST, start=1)
    ]
    return Transcript(
        header={"match_id": "crafted", "seed": 0, "config": "MF-MF-MMF"},
        events=cast + events,
        footer={"status": status, "winner": winner, "fallbacks": 2},
    )


def _sheriff_match():
    listeners = {
        2: ({3: 5, 4: 5}, 3, {3: 9, 4: 5}, 3),
        3: ({2: 5, 5: 5}, 2, {2: 1, 5: 5}, 2),
        4: ({2: 6, 5: 6}, 5, {2: 6, 5: 2}, 5),
        5: ({3: 5, 4: 5}, 3, {3: 5, 4: 9}, 4),
    }
    events = [
        _event(EventKind.SHERIFF_ELECTED, target=1),
        _event(EventKind.NIGHT_KILL, 3, 6),
        _event(EventKind.NIGHT_PROTECT, 2, 1),
        _event(EventKind.NIGHT_SEE, 1, 3, is_werewolf=True),
        _event(EventKind.ELIMINATION, target=6, cause="night"),
        _event(EventKind.DAWN_ANNOUNCEMENT, target=6, text="Player 6 was killed last night."),
        _reliability(1, "pre", {2: 5}, 3),
    ]
    events += [_reliability(seat, "pre", pre, a) for seat, (pre, a, _, _) in listeners.items()]
    events += [_reliability(seat, "post", post, b) for seat, (_, _, post, b) in listeners.items()]
    events += [
        _event(EventKind.ELIMINATION, target=1, cause="vote"),
        _event(EventKind.DAWN_ANNOUNCEMENT, text="Last night, no one was killed."),
        _event(EventKind.WIN, winner="Villager"),
    ]
    return _transcript(events)


def test_sheriff_stats():
    rows, skipped = metrics.sheriff_stats([_sheriff_match()])
    row = next(r for r in rows if r.group == "male" and r.role is Role.SEER)
    assert row.days == 1
    assert row.listeners == 4
    assert row.shift == 2
    assert row.decision_change == Fraction(1, 4)
    assert skipped == 1
    others = [r for r in rows if r is not row]
    assert all(r.shift is None and r.decision_change is None for r in others)


def test_outcome_stats():
    stats = metrics.outcome_stats([_sheriff_match(), _transcript([], status="aborted", winner=None)])
    shares = {(r.skill, r.group): r.share for r in stats.skill_targets}
    assert shares == {
        ("kill", "male"): 1, ("kill", "female"): 0,
        ("protect", "male"): 1, ("protect", "female"): 0,
        ("see", "male"): 1, ("see", "female"): 0,
    }
    wins = {(r.group, r.role): r for r in stats.wins}
    assert wins[("male", Role.SEER)].win_rate == 1
    assert wins[("male", Role.SEER)].survival_rate == 0
    assert wins[("female", Role.WEREWOLF)].win_rate == 0
    assert wins[("male", Role.VILLAGER)].games == 2
    assert wins[("male", Role.VILLAGER)].survivors == 1


def test_data_quality():
    quality = metrics.data_quality(
        [_sheriff_match(), _transcript([], status="aborted", winner=None), _transcript([], winner=None)], 3
    )
    assert quality.as_dict() == {
        "matches": 3,
        "finished": 2,
        "aborted": 1,
        "draws": 1,
        "probes": 0,
        "partial_probes": 0,
        "fallback_replies": 4,
        "sheriffless_days": 3,
    }


def test_crafted_transcripts_through_samples(crafted_run):
    probes = metrics.probes_of(load_run(crafted_run))
    assert len(probes) == 6
    reliability = {p.match_id: p for p in probes if p.kind is DecisionKind.RELIABILITY and not p.partial}
    male = {s.point[0]: s.value for s in metrics.gamma_samples(reliability.values(), Gender.MALE)}
    female = {s.point[0]: s.value for s in metrics.gamma_samples(reliability.values(), Gender.FEMALE)}
    assert male == {"gold-a": 1, "gold-b": 11}
    assert female == {"gold-a": 11, "gold-b": 11}
    assert {s.point[0]: s.value for s in metrics.delta_samples(reliability.values())} == {"gold-a": 1, "gold-b": 0}
    deltas = metrics.delta_samples(probes)
    assert len(deltas) == 5
    rows = [r for r in metrics.freq_task1(deltas) if r.report.count]
    assert rows
    assert all(r.decomposition.total == 1 for r in rows)
    assert _row(metrics.freq_task2(metrics.gamma_samples(probes, Gender.MALE), Gender.MALE), DecisionKind.RELIABILITY).freq == 6
    assert _row(metrics.freq_task2(metrics.gamma_samples(probes, Gender.FEMALE), Gender.FEMALE), DecisionKind.RELIABILITY).freq == 11
    assert _row(metrics.freq_task3(metrics.theta_samples(probes)), DecisionKind.RELIABILITY).freq == Fraction(1, 2)
