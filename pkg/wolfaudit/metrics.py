"""Batch statistics over probes and transcripts.

Everything here is exact: comparator values arrive as ints or Fractions and
stay rational until a report formats them.
"""

from collections import defaultdict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .game import DecisionKind, EventKind, Role, Winner
from .harness import Closeness, DecisionProbe, closeness, delta, gamma, theta
from .roster import Gender, name_roster
from .transcript import Transcript

ALL_DAYS = "all"
DAY_BUCKETS = ("1", "2", "3", "4+")

SCENARIO_ROLES = {
    DecisionKind.SKILL: (Role.WEREWOLF, Role.SEER, Role.GUARD),
    DecisionKind.VOTE: (Role.WEREWOLF, Role.VILLAGER, Role.SEER, Role.GUARD),
    DecisionKind.RELIABILITY: (Role.WEREWOLF, Role.VILLAGER, Role.SEER, Role.GUARD),
}
ROLES = (Role.WEREWOLF, Role.VILLAGER, Role.SEER, Role.GUARD)
SKILLS = ("kill", "protect", "see")


def day_bucket(day: int) -> str:
    return str(day) if day < 4 else "4+"


@dataclass(frozen=True)
class MetricSample:
    point: tuple
    scenario: DecisionKind
    role: Role
    actor_gender: Gender
    day: int
    value: int | Fraction
    actor_name: str | None = None


def collect_samples(
    probes: Iterable[DecisionProbe], comparator: Callable[[DecisionProbe], int | Fraction | None]
) -> list[MetricSample]:
    """Apply a comparator to every probe, dropping skipped points."""
    samples = []
    for p in probes:
        value = comparator(p)
        if value is None:
            continue
        samples.append(
            MetricSample(p.point, p.kind, p.role, p.actor_gender, p.day, value, p.actor_name)
        )
    return samples


def probes_of(transcripts: Iterable[Transcript]) -> list[DecisionProbe]:
    return [p for t in transcripts if t.finished for p in t.probes if p.kind.audited]


def delta_samples(probes: Iterable[DecisionProbe]) -> list[MetricSample]:
    return collect_samples(probes, delta)


def gamma_samples(
    probes: Iterable[DecisionProbe], gender: Gender, literal_max: bool = False
) -> list[MetricSample]:
    return collect_samples(probes, lambda p: gamma(p, None, gender, literal_max))


def theta_samples(probes: Iterable[DecisionProbe]) -> list[MetricSample]:
    return collect_samples(probes, theta)


@dataclass(frozen=True)
class FreqReport:
    scenario: DecisionKind
    role: Role
    group: str
    day: str
    count: int
    freq: Fraction | None

    @property
    def defined(self) -> bool:
        return self.freq is not None


@dataclass
class FreqAccumulator:
    """Streaming (count, sum) per group key; ``merge`` is associative."""

    totals: dict[tuple, tuple[int, Fraction]] = field(default_factory=dict)

    def add(self, key: tuple, value: int | Fraction) -> None:
        count, total = self.totals.get(key, (0, Fraction(0)))
        self.totals[key] = (count + 1, total + value)

    def add_sample(self, sample: MetricSample, group: str = ALL_DAYS) -> None:
        for day in (day_bucket(sample.day), ALL_DAYS):
            self.add((sample.scenario, sample.role, group, day), sample.value)

    def merge(self, other: "FreqAccumulator") -> "FreqAccumulator":
        merged = dict(self.totals)
        for key, (count, total) in other.totals.items():
            c, t = merged.get(key, (0, Fraction(0)))
            merged[key] = (c + count, t + total)
        return FreqAccumulator(merged)

    def count(self, key: tuple) -> int:
        return self.totals.get(key, (0, Fraction(0)))[0]

    def total(self, key: tuple) -> Fraction:
        return self.totals.get(key, (0, Fraction(0)))[1]

    def mean(self, key: tuple) -> Fraction | None:
        count, total = self.totals.get(key, (0, Fraction(0)))
        return total / count if count else None

    def report(self, groups: Iterable[str] = (ALL_DAYS,)) -> list[FreqReport]:
        """Full grid of scenario x role x group x day; empty cells stay undefined."""
        groups = list(groups)
        rows = []
        for scenario, roles in SCENARIO_ROLES.items():
            for role in roles:
                for group in groups:
                    for day in (*DAY_BUCKETS, ALL_DAYS):
                        key = (scenario, role, group, day)
                        rows.append(FreqReport(scenario, role, group, day, self.count(key), self.mean(key)))
        return rows


def accumulate(samples: Iterable[MetricSample], group_by: Callable[[MetricSample], str] | None = None) -> FreqAccumulator:
    acc = FreqAccumulator()
    for sample in samples:
        acc.add_sample(sample, group_by(sample) if group_by else ALL_DAYS)
    return acc


@dataclass(frozen=True)
class Decomposition:
    """Four shares of all points in a group, summing to one.

    ``male_kept``/``female_kept`` are points whose decision did not change,
    ``male_changed``/``female_changed`` those that did.
    """

    male_kept: Fraction
    female_kept: Fraction
    male_changed: Fraction
    female_changed: Fraction

    @property
    def total(self) -> Fraction:
        return self.male_kept + self.female_kept + self.male_changed + self.female_changed


@dataclass(frozen=True)
class Task1Row:
    report: FreqReport
    decomposition: Decomposition | None


def freq_task1(samples: Iterable[MetricSample]) -> list[Task1Row]:
    samples = list(samples)
    overall = accumulate(samples)
    by_gender = accumulate(samples, lambda s: str(s.actor_gender))
    rows = []
    for report in overall.report():
        key = (report.scenario, report.role)
        decomposition = None
        if report.count:
            n = report.count
            males = by_gender.count((*key, str(Gender.MALE), report.day))
            females = by_gender.count((*key, str(Gender.FEMALE), report.day))
            male_changed = by_gender.total((*key, str(Gender.MALE), report.day)) / n
            female_changed = by_gender.total((*key, str(Gender.FEMALE), report.day)) / n
            decomposition = Decomposition(
                male_kept=Fraction(males, n) - male_changed,
                female_kept=Fraction(females, n) - female_changed,
                male_changed=male_changed,
                female_changed=female_changed,
            )
        rows.append(Task1Row(report, decomposition))
    return rows


def freq_by_name(samples: Iterable[MetricSample]) -> list[FreqReport]:
    acc = accumulate(samples, lambda s: s.actor_name or "")
    return acc.report(name for name, _ in name_roster())


def freq_task2(samples: Iterable[MetricSample], gender: Gender) -> list[FreqReport]:
    return accumulate(samples, lambda s: gender.word).report([gender.word])


def freq_task3(samples: Iterable[MetricSample]) -> list[FreqReport]:
    return accumulate(samples).report()


@dataclass(frozen=True)
class ClosenessRow:
    scenario: DecisionKind
    role: Role
    day: str
    count: int
    male: Fraction | None
    female: Fraction | None
    neither: Fraction | None


def closeness_tally(
    probes: Iterable[DecisionProbe], literal_direction: bool = False, literal_max: bool = False
) -> list[ClosenessRow]:
    counts: dict[tuple, dict[Closeness, int]] = defaultdict(lambda: dict.fromkeys(Closeness, 0))
    for p in probes:
        label = closeness(p, None, literal_direction, literal_max)
        if label is None:
            continue
        for day in (day_bucket(p.day), ALL_DAYS):
            counts[(p.kind, p.role, day)][label] += 1
    rows = []
    for scenario, roles in SCENARIO_ROLES.items():
        for role in roles:
            for day in (*DAY_BUCKETS, ALL_DAYS):
                tally = counts.get((scenario, role, day), dict.fromkeys(Closeness, 0))
                n = sum(tally.values())
                share = (lambda c: Fraction(tally[c], n)) if n else (lambda c: None)
                rows.append(
                    ClosenessRow(
                        scenario, role, day, n,
                        share(Closeness.CLOSER_TO_MALE),
                        share(Closeness.CLOSER_TO_FEMALE),
                        share(Closeness.NEITHER),
                    )
                )
    return rows


@dataclass(frozen=True)
class SheriffRow:
    group: str
    role: Role
    days: int
    listeners: int
    shift: Fraction | None
    decision_change: Fraction | None


def _sheriff_days(t: Transcript):
    """Per day: sheriff seat (None when dead) and pre/post listener records."""
    sheriff, day, alive = None, 0, {p.seat for p in t.players()}
    records: dict[int, dict] = {}
    for e in t.events:
        match e.kind:
            case EventKind.SHERIFF_ELECTED:
                sheriff = e.target
            case EventKind.ELIMINATION:
                alive.discard(e.target)
            case EventKind.DAWN_ANNOUNCEMENT:
                day += 1
                records[day] = {"sheriff": sheriff if sheriff in alive else None, "pre": {}, "post": {}}
            case EventKind.RELIABILITY_UPDATE if day in records:
                records[day][e.payload["stage"]][e.actor] = e.payload
    return records


def sheriff_stats(transcripts: Iterable[Transcript], by_name: bool = False) -> tuple[list[SheriffRow], int]:
    """Reliability shift and decision change caused by sheriff summaries.

    Returns the rows and the number of days skipped for lack of a sheriff.
    """
    shifts: dict[tuple, list] = defaultdict(list)
    changes: dict[tuple, list] = defaultdict(list)
    day_counts: dict[tuple, int] = defaultdict(int)
    skipped = 0
    for t in transcripts:
        if not t.finished:
            continue
        players = {p.seat: p for p in t.players()}
        for record in _sheriff_days(t).values():
            sheriff = record["sheriff"]
            if sheriff is None:
                skipped += 1
                continue
            profile = players[sheriff]
            key = (profile.proxy_name if by_name else profile.true_gender.word, profile.role)
            listeners = sorted(set(record["pre"]) & set(record["post"]) - {sheriff})
            if not listeners:
                continue
            day_counts[key] += 1
            for seat in listeners:
                pre, post = record["pre"][seat], record["post"][seat]
                for target in sorted(set(pre["scores"]) & set(post["scores"])):
                    shifts[key].append(abs(post["scores"][target] - pre["scores"][target]))
                changes[key].append(int(pre["intent"] != post["intent"]))
    if by_name:
        groups = [name for name, _ in name_roster()]
    else:
        groups = [g.word for g in Gender]
    rows = []
    for group in groups:
        for role in ROLES:
            key = (group, role)
            rows.append(
                SheriffRow(
                    group,
                    role,
                    day_counts.get(key, 0),
                    len(changes.get(key, ())),
                    Fraction(sum(shifts[key]), len(shifts[key])) if shifts.get(key) else None,
                    Fraction(sum(changes[key]), len(changes[key])) if changes.get(key) else None,
                )
            )
    return rows, skipped


@dataclass(frozen=True)
class SkillTargetRow:
    skill: str
    group: str
    count: int
    share: Fraction | None


@dataclass(frozen=True)
class WinRow:
    group: str
    role: Role
    games: int
    wins: int
    survivors: int

    @property
    def win_rate(self) -> Fraction | None:
        return Fraction(self.wins, self.games) if self.games else None

    @property
    def survival_rate(self) -> Fraction | None:
        return Fraction(self.survivors, self.games) if self.games else None


@dataclass(frozen=True)
class OutcomeStats:
    skill_targets: list[SkillTargetRow]
    wins: list[WinRow]


_SKILL_EVENTS = {
    EventKind.NIGHT_KILL: "kill",
    EventKind.NIGHT_PROTECT: "protect",
    EventKind.NIGHT_SEE: "see",
}


def outcome_stats(transcripts: Iterable[Transcript], by_name: bool = False) -> OutcomeStats:
    """Skill-target counts and win/survival counts over decided matches.

    Every member of the winning team wins, alive or not; survivors are
    counted separately.
    """
    targets: dict[tuple[str, str], int] = defaultdict(int)
    games: dict[tuple, int] = defaultdict(int)
    wins: dict[tuple, int] = defaultdict(int)
    survivors: dict[tuple, int] = defaultdict(int)
    for t in transcripts:
        if not t.finished or t.winner is None:
            continue
        players = t.players()
        profile = {p.seat: p for p in players}
        group_of = (lambda p: p.proxy_name) if by_name else (lambda p: p.true_gender.word)
        for e in t.events:
            if e.kind in _SKILL_EVENTS:
                targets[(_SKILL_EVENTS[e.kind], group_of(profile[e.target]))] += 1
        winner = Winner(t.winner)
        for p in players:
            key = (group_of(p), p.role)
            games[key] += 1
            wins[key] += winner.includes(p.role)
            survivors[key] += p.alive
    groups = [name for name, _ in name_roster()] if by_name else [g.word for g in Gender]
    skill_rows = []
    for skill in SKILLS:
        total = sum(targets[(skill, g)] for g in groups)
        for group in groups:
            count = targets[(skill, group)]
            skill_rows.append(SkillTargetRow(skill, group, count, Fraction(count, total) if total else None))
    win_rows = [
        WinRow(group, role, games[(group, role)], wins[(group, role)], survivors[(group, role)])
        for group in groups
        for role in ROLES
    ]
    return OutcomeStats(skill_rows, win_rows)


@dataclass(frozen=True)
class DataQuality:
    matches: int = 0
    finished: int = 0
    aborted: int = 0
    draws: int = 0
    probes: int = 0
    partial_probes: int = 0
    fallback_replies: int = 0
    sheriffless_days: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def data_quality(transcripts: Iterable[Transcript], sheriffless_days: int = 0) -> DataQuality:
    transcripts = list(transcripts)
    finished = [t for t in transcripts if t.finished]
    probes = [p for t in finished for p in t.probes]
    return DataQuality(
        matches=len(transcripts),
        finished=len(finished),
        aborted=sum(t.status == "aborted" for t in transcripts),
        draws=sum(t.drawn for t in transcripts),
        probes=len(probes),
        partial_probes=sum(p.partial for p in probes),
        fallback_replies=sum((t.footer or {}).get("fallbacks", 0) for t in finished),
        sheriffless_days=sheriffless_days,
    )
