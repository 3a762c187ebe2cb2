"""Tables and figures computed from a run directory."""

from fractions import Fraction
from pathlib import Path

import orjson
import pandas as pd

from . import metrics
from .game import DecisionKind
from .metrics import ALL_DAYS
from .roster import Gender
from .svg import bar_chart, violin_chart
from .transcript import Transcript, load_run
from .utils import TranscriptError, atomic_write, dumps, logger

FLOAT_FORMAT = "%.6f"


def _num(value: Fraction | int | None) -> float | None:
    return None if value is None else float(value)


def _csv(rows: list[dict], path: Path) -> None:
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _svg(text: str, path: Path) -> None:
    atomic_write(path, text.encode("utf-8"))


def _freq_rows(reports: list[metrics.FreqReport]) -> list[dict]:
    return [
        {
            "scenario": str(r.scenario),
            "role": str(r.role),
            "group": r.group,
            "day": r.day,
            "count": r.count,
            "freq": _num(r.freq),
        }
        for r in reports
    ]


def _overall(reports: list[metrics.FreqReport], group: str = ALL_DAYS) -> dict:
    """{scenario: {role: freq}} over all days, for bar charts and the summary."""
    table: dict[str, dict[str, float | None]] = {}
    for r in reports:
        if r.day == ALL_DAYS and r.group == group:
            table.setdefault(str(r.scenario), {})[str(r.role)] = _num(r.freq)
    return table


def _bars(title: str, table: dict, path: Path, y_max: float = 1.0) -> None:
    roles = sorted({role for row in table.values() for role in row})
    series = {scenario: [row.get(role) for role in roles] for scenario, row in table.items()}
    _svg(bar_chart(title, roles, series, y_max), path)


def _read_plan(run_dir: Path) -> dict:
    manifest = run_dir / "manifest.json"
    if not manifest.exists():
        return {}
    return orjson.loads(manifest.read_bytes()).get("plan", {})


def _sheriff_tables(rows: list[metrics.SheriffRow], out_dir: Path, stem: str) -> None:
    _csv(
        [
            {
                "group": r.group,
                "role": str(r.role),
                "days": r.days,
                "listeners": r.listeners,
                "reliability_shift": _num(r.shift),
                "decision_change": _num(r.decision_change),
            }
            for r in rows
        ],
        out_dir / f"{stem}.csv",
    )
    groups = list(dict.fromkeys(r.group for r in rows))
    _svg(
        bar_chart(
            "Sheriff decision change",
            groups,
            {str(role): [_num(r.decision_change) for r in rows if r.role is role] for role in metrics.ROLES},
        ),
        out_dir / f"{stem}.svg",
    )


def _outcome_tables(outcome: metrics.OutcomeStats, out_dir: Path, suffix: str) -> None:
    _csv(
        [
            {"skill": r.skill, "group": r.group, "count": r.count, "share": _num(r.share)}
            for r in outcome.skill_targets
        ],
        out_dir / f"skill_targets{suffix}.csv",
    )
    targeted = list(dict.fromkeys(r.group for r in outcome.skill_targets))
    _svg(
        bar_chart(
            "Skill targets",
            list(metrics.SKILLS),
            {g: [_num(r.share) for r in outcome.skill_targets if r.group == g] for g in targeted},
        ),
        out_dir / f"skill_targets{suffix}.svg",
    )
    _csv(
        [
            {
                "group": r.group,
                "role": str(r.role),
                "games": r.games,
                "wins": r.wins,
                "survivors": r.survivors,
                "win_rate": _num(r.win_rate),
                "survival_rate": _num(r.survival_rate),
            }
            for r in outcome.wins
        ],
        out_dir / f"win_rates{suffix}.csv",
    )
    _svg(
        bar_chart(
            "Win rate",
            list(dict.fromkeys(r.group for r in outcome.wins)),
            {str(role): [_num(r.win_rate) for r in outcome.wins if r.role is role] for role in metrics.ROLES},
        ),
        out_dir / f"win_rates{suffix}.svg",
    )


def generate(run_dir: Path | str, out_dir: Path | str) -> dict:
    """Write every CSV/SVG table for a run and return the JSON summary."""
    run_dir, out_dir = Path(run_dir), Path(out_dir)
    transcripts: list[Transcript] = load_run(run_dir)
    if not transcripts:
        raise TranscriptError("运行目录没有对局记录", run_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan = _read_plan(run_dir)
    literal_max = bool(plan.get("gamma_literal_max", False))
    by_name = any(t.names is not None for t in transcripts)
    probes = metrics.probes_of(transcripts)
    logger.info(f"生成报告: {run_dir} 共{len(transcripts)}局, {len(probes)}个探测点")

    # 1.行为变化频率与四项分解
    deltas = metrics.delta_samples(probes)
    t1 = metrics.freq_task1(deltas)
    rows = []
    for row in t1:
        d = row.decomposition
        rows.append(
            {
                **_freq_rows([row.report])[0],
                "male_unchanged": _num(d and d.male_kept),
                "female_unchanged": _num(d and d.female_kept),
                "male_changed": _num(d and d.male_changed),
                "female_changed": _num(d and d.female_changed),
            }
        )
    _csv(rows, out_dir / "t1_freq.csv")
    t1_table = _overall([row.report for row in t1])
    _bars("Frequency of decision discrepancies", t1_table, out_dir / "t1_freq.svg")
    reliability = {
        str(role): [float(s.value) for s in deltas if s.scenario is DecisionKind.RELIABILITY and s.role is role]
        for role in metrics.ROLES
    }
    _svg(violin_chart("Reliability discrepancy by role", reliability), out_dir / "t1_reliability.svg")
    if by_name:
        _csv(_freq_rows(metrics.freq_by_name(deltas)), out_dir / "t1_freq_names.csv")

    summary: dict = {"t1_freq": t1_table}
    if not by_name:
        # 2.性别相似度与接近程度
        t2 = []
        for gender in Gender:
            t2 += metrics.freq_task2(metrics.gamma_samples(probes, gender, literal_max), gender)
        _csv(_freq_rows(t2), out_dir / "t2_freq.csv")
        tally = metrics.closeness_tally(probes, literal_max=literal_max)
        literal = metrics.closeness_tally(probes, literal_direction=True, literal_max=literal_max)
        _csv(
            [
                {
                    "scenario": str(a.scenario),
                    "role": str(a.role),
                    "day": a.day,
                    "count": a.count,
                    "closer_male": _num(a.male),
                    "closer_female": _num(a.female),
                    "neither": _num(a.neither),
                    "closer_male_literal": _num(b.male),
                    "closer_female_literal": _num(b.female),
                }
                for a, b in zip(tally, literal)
            ],
            out_dir / "t2_closeness.csv",
        )
        closeness = {
            f"{row.scenario}/{row.role}": {
                "male": _num(row.male),
                "female": _num(row.female),
                "neither": _num(row.neither),
            }
            for row in tally
            if row.day == ALL_DAYS
        }
        labels = list(closeness)
        _svg(
            bar_chart(
                "Closeness to gender",
                labels,
                {k: [closeness[label][k] for label in labels] for k in ("male", "female", "neither")},
            ),
            out_dir / "t2_closeness.svg",
        )
        # 3.他人性别互换后的一致率
        t3 = metrics.freq_task3(metrics.theta_samples(probes))
        _csv(_freq_rows(t3), out_dir / "t3_freq.csv")
        t3_table = _overall(t3)
        _bars("Decision consistency under swapped genders", t3_table, out_dir / "t3_freq.svg")
        summary |= {"t2_closeness": closeness, "t3_freq": t3_table}

    # 4.警长影响
    sheriff, skipped = metrics.sheriff_stats(transcripts, by_name)
    _sheriff_tables(sheriff, out_dir, "sheriff")

    # 5.技能目标与胜率
    _outcome_tables(metrics.outcome_stats(transcripts, by_name), out_dir, "")
    if by_name:
        # 名字按对应性别合并
        _sheriff_tables(metrics.sheriff_stats(transcripts)[0], out_dir, "sheriff_gender")
        _outcome_tables(metrics.outcome_stats(transcripts), out_dir, "_gender")

    quality = metrics.data_quality(transcripts, skipped)
    _csv([{"metric": k, "value": v} for k, v in quality.as_dict().items()], out_dir / "data_quality.csv")
    summary |= {"study": "names" if by_name else "gender", "data_quality": quality.as_dict()}
    atomic_write(out_dir / "summary.json", dumps(summary))
    return summary
