import orjson
import pandas as pd
import pytest

from wolfaudit.__main__ import main
from wolfaudit.cache import ResponseCache
from wolfaudit.gateway import ChatMessage, ChatRequest
from wolfaudit.roster import name_roster

from .crafted import GOLDEN

REPORT_FILES = [
    "t1_freq.csv",
    "t1_freq.svg",
    "t1_reliability.svg",
    "t2_freq.csv",
    "t2_closeness.csv",
    "t2_closeness.svg",
    "t3_freq.csv",
    "t3_freq.svg",
    "sheriff.csv",
    "sheriff.svg",
    "skill_targets.csv",
    "skill_targets.svg",
    "win_rates.csv",
    "win_rates.svg",
    "data_quality.csv",
    "summary.json",
]


@pytest.fixture
def plan_file(tmp_path):
    path = tmp_path / "plan.json"
    plan = {
        "plan_id": "cli",
        "configs": ["MF-MF-MMF", "FM-FF-MFF", "MM-MM-MMM"],
        "repetitions": 1,
        "seed": 99,
        "backend": {"kind": "gender-blind"},
    }
    path.write_bytes(orjson.dumps(plan))
    return path


@pytest.fixture
def run_dir(tmp_path, plan_file):
    assert main(["simulate", "--plan", str(plan_file), "--out", str(tmp_path / "runs"), "--workers", "2"]) == 0
    return tmp_path / "runs" / "cli"


def test_missing_plan_is_a_usage_error(tmp_path):
    assert main(["simulate", "--plan", str(tmp_path / "absent.json")]) == 2


def test_dry_run(tmp_path, plan_file, capsys):
    assert main(["simulate", "--plan", str(plan_file), "--out", str(tmp_path / "runs"), "--dry-run"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("cli-g00-r0 seed=")
    assert out[-1].startswith("3 matches")
    assert not (tmp_path / "runs").exists()


def test_seed_override_changes_schedule(tmp_path, plan_file, capsys):
    main(["simulate", "--plan", str(plan_file), "--dry-run"])
    default = capsys.readouterr().out
    main(["simulate", "--plan", str(plan_file), "--dry-run", "--seed", "1"])
    assert capsys.readouterr().out != default


def test_report(tmp_path, run_dir):
    assert sorted(p.name for p in run_dir.glob("*.jsonl")) == ["cli-g00-r0.jsonl", "cli-g01-r0.jsonl", "cli-g02-r0.jsonl"]
    first, second = tmp_path / "report", tmp_path / "again"
    assert main(["report", "--run", str(run_dir), "--out", str(first)]) == 0
    assert main(["report", "--run", str(run_dir), "--out", str(second)]) == 0
    for name in REPORT_FILES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    for name in REPORT_FILES:
        if name.endswith(".svg"):
            assert (first / name).read_text().startswith("<svg")
    t3 = pd.read_csv(first / "t3_freq.csv", dtype={"day": str})
    defined = t3[t3["freq"].notna()]
    assert not defined.empty
    assert (defined["freq"] == 1.0).all()
    assert "1.000000" in (first / "t3_freq.csv").read_text()
    t1 = pd.read_csv(first / "t1_freq.csv", dtype={"day": str})
    assert (t1[t1["freq"].notna()]["freq"] == 0.0).all()
    summary = orjson.loads((first / "summary.json").read_bytes())
    assert summary["study"] == "gender"
    assert summary["data_quality"]["finished"] == 3
    assert summary["data_quality"]["partial_probes"] == 0


def test_audit_writes_report(tmp_path, plan_file):
    out = tmp_path / "runs"
    assert main(["audit", "--plan", str(plan_file), "--out", str(out), "--workers", "1"]) == 0
    assert (out / "report" / "summary.json").exists()


def test_replay(run_dir, capsys):
    path = run_dir / "cli-g00-r0.jsonl"
    assert main(["replay", str(path)]) == 0
    assert "hash ok" in capsys.readouterr().out


def test_replay_detects_edited_vote(run_dir):
    path = run_dir / "cli-g00-r0.jsonl"
    lines = path.read_bytes().splitlines()
    for index, line in enumerate(lines):
        record = orjson.loads(line)
        if record["record"] == "event" and record["kind"] == "Vote" and record["target"] is not None:
            record["target"] = record["actor"]
            lines[index] = orjson.dumps(record, option=orjson.OPT_SORT_KEYS)
            break
    path.write_bytes(b"\n".join(lines) + b"\n")
    assert main(["replay", str(path)]) == 4


def test_replay_rejects_truncated_transcript(run_dir):
    path = run_dir / "cli-g00-r0.jsonl"
    lines = path.read_bytes().splitlines()
    path.write_bytes(b"\n".join(lines[: len(lines) // 2]) + b"\n")
    assert main(["replay", str(path)]) == 3


def test_report_on_empty_run(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["report", "--run", str(tmp_path / "empty"), "--out", str(tmp_path / "out")]) == 3


def test_validate_cache(tmp_path, capsys):
    cache = ResponseCache(tmp_path / "cache")
    req = ChatRequest("m", (ChatMessage("user", "hi"),))
    cache.set(req.key.digest, req.payload, "hello")
    assert main(["validate-cache", "--cache-dir", str(tmp_path / "cache")]) == 0
    cache.path_for(req.key.digest).write_bytes(b"garbage")
    assert main(["validate-cache", "--cache-dir", str(tmp_path / "cache")]) == 4
    assert str(cache.path_for(req.key.digest)) in capsys.readouterr().out


GOLDEN_TABLES = [
    "t1_freq.csv",
    "t2_freq.csv",
    "t3_freq.csv",
    "t2_closeness.csv",
    "sheriff.csv",
    "skill_targets.csv",
    "win_rates.csv",
    "data_quality.csv",
]


def _table(path):
    frame = pd.read_csv(path)
    if "day" in frame:
        frame["day"] = frame["day"].astype(str)
    return frame


@pytest.mark.parametrize("name", GOLDEN_TABLES)
def test_report_matches_golden(tmp_path, crafted_run, name):
    assert main(["report", "--run", str(crafted_run), "--out", str(tmp_path / "report")]) == 0
    produced = _table(tmp_path / "report" / name)
    if "count" in produced and "skill" not in produced:
        produced = produced[produced["count"] > 0].reset_index(drop=True)
    pd.testing.assert_frame_equal(produced, _table(GOLDEN / name), check_dtype=False, rtol=0, atol=1e-9)


def test_name_study_report_adds_gender_tables(tmp_path):
    path = tmp_path / "names.json"
    path.write_bytes(
        orjson.dumps({"plan_id": "nm", "study": "names", "repetitions": 3, "seed": 7, "backend": {"kind": "gender-blind"}})
    )
    assert main(["audit", "--plan", str(path), "--out", str(tmp_path / "runs"), "--workers", "1"]) == 0
    report = tmp_path / "runs" / "report"
    for name in ("sheriff_gender.svg", "win_rates_gender.svg", "skill_targets_gender.csv", "skill_targets_gender.svg"):
        assert (report / name).exists(), name
    by_name = pd.read_csv(report / "win_rates.csv")
    by_gender = pd.read_csv(report / "win_rates_gender.csv")
    assert len(by_name) == 28
    assert list(by_gender["group"].unique()) == ["male", "female"]
    roster = {name: gender.word for name, gender in name_roster()}
    totals = by_name.assign(gender=by_name["group"].map(roster)).groupby(["gender", "role"])[["games", "wins", "survivors"]].sum()
    for row in by_gender.itertuples():
        assert tuple(totals.loc[(row.group, row.role)]) == (row.games, row.wins, row.survivors)
    sheriff = pd.read_csv(report / "sheriff_gender.csv")
    assert len(sheriff) == 8
    assert sheriff["days"].sum() == pd.read_csv(report / "sheriff.csv")["days"].sum()
