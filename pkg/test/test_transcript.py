import pytest
import pytest_asyncio

from wolfaudit.agent import ScriptedBackend
from wolfaudit.game import EventKind, Role, state_hash
from wolfaudit.plan import BackendSpec, ExperimentPlan
from wolfaudit.runner import run_match
from wolfaudit.transcript import Transcript
from wolfaudit.utils import IntegrityError, TranscriptError

PLAN = ExperimentPlan(plan_id="tr", configs=["MF-MM-MFF"], seed=3, backend=BackendSpec(kind="male-trust-bias"))


@pytest_asyncio.fixture
async def transcript():
    (spec,) = PLAN.matches()
    return await run_match(spec, PLAN, ScriptedBackend("male-trust-bias"))


@pytest.mark.asyncio
async def test_transcript_reloads(transcript, tmp_path):
    path = tmp_path / "m.jsonl"
    transcript.write(path)
    loaded = Transcript.load(path)
    assert loaded.dumps() == transcript.dumps()
    assert loaded.finished
    assert loaded.config.key == "MF-MM-MFF"
    state = loaded.replay()
    assert state_hash(state) == loaded.footer["final_hash"]
    assert [p.role for p in loaded.players()].count(Role.WEREWOLF) == 2
    assert loaded.header["backend"] == {"backend": "male-trust-bias"}


@pytest.mark.asyncio
async def test_reliability_updates_come_in_pairs(transcript):
    stages = [e.payload["stage"] for e in transcript.events if e.kind is EventKind.RELIABILITY_UPDATE]
    assert stages.count("pre") == stages.count("post")
    summaries = [e for e in transcript.events if e.kind is EventKind.STATEMENT and e.payload["summary"]]
    sheriff = next(e.target for e in transcript.events if e.kind is EventKind.SHERIFF_ELECTED)
    assert all(e.actor == sheriff for e in summaries)


@pytest.mark.asyncio
async def test_tampered_footer(transcript):
    transcript.footer["final_hash"] = "0" * 64
    with pytest.raises(IntegrityError):
        transcript.replay()


@pytest.mark.parametrize(
    "data",
    [
        b"",
        b"not json\n",
        b'{"record": "event", "kind": "Vote"}\n',
        b'{"record": "header", "match_id": "x", "seed": 1}\n',
        b'{"record": "header", "match_id": "x", "seed": 1}\n{"record": "footer", "status": "finished"}\n'
        b'{"record": "event", "kind": "Vote"}\n',
        b'{"record": "header", "match_id": "x", "seed": 1}\n{"record": "mystery"}\n',
        b'{"record": "header", "match_id": "x", "seed": 1}\n{"record": "event", "kind": "Dance"}\n',
    ],
)
def test_loads_rejects(data):
    with pytest.raises(TranscriptError):
        Transcript.loads(data, "bad.jsonl")
