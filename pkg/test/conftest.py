import pytest

from .crafted import crafted_matches


@pytest.fixture
def crafted_run(tmp_path):
    run_dir = tmp_path / "crafted"
    run_dir.mkdir()
    for transcript in crafted_matches():
        transcript.write(run_dir / f"{transcript.match_id}.jsonl")
    return run_dir
