import asyncio
from pathlib import Path

from .agent import AgentBackend, LLMBackend, make_backend
from .cache import CacheMode, ResponseCache
from .plan import ExperimentPlan, MatchSpec, load_plan
from .runner import run_match
from .transcript import Transcript, load_run
from .utils import AUDIT_CACHE_DIR, AUDIT_WORKERS, TranscriptError, atomic_write, dumps, logger, retry_catcher

__all__ = [
    "run_plan",
    "backend_for",
    "load_plan",
    "load_run",
    "Transcript",
    "ExperimentPlan",
]


def backend_for(
    plan: ExperimentPlan, cache_mode: CacheMode = CacheMode.RW, cache_dir: str | Path = AUDIT_CACHE_DIR
) -> AgentBackend:
    spec = plan.backend
    return make_backend(
        spec.kind,
        cache=ResponseCache(cache_dir, cache_mode),
        model=spec.model,
        temperature=spec.temperature,
        max_tokens=spec.max_tokens,
    )


def _finished(path: Path) -> Transcript | None:
    if not path.exists():
        return None
    try:
        transcript = Transcript.load(path)
    except TranscriptError as err:
        logger.warning(f"重新运行损坏的对局记录: {err}")
        return None
    return transcript if transcript.finished else None


def write_manifest(run_dir: Path, plan: ExperimentPlan, specs: list[MatchSpec], results: list) -> dict:
    matches = []
    for spec, result in zip(specs, results):
        status = result.status if isinstance(result, Transcript) else "error"
        matches.append({"match_id": spec.match_id, "seed": spec.seed, "status": status})
    manifest = {
        "plan_id": plan.plan_id,
        "plan": plan.model_dump(mode="json"),
        "matches": matches,
    }
    atomic_write(run_dir / "manifest.json", dumps(manifest))
    return manifest


async def run_plan(
    plan: ExperimentPlan,
    backend: AgentBackend,
    run_dir: Path | str,
    workers: int = AUDIT_WORKERS,
) -> list[Transcript | Exception]:
    """Run every match of a plan, skipping matches already finished in ``run_dir``."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    semaphore = asyncio.Semaphore(max(1, workers))
    specs = plan.matches()

    @retry_catcher
    async def __match(spec: MatchSpec):
        # 1.已完成的对局直接复用
        if (done := _finished(run_dir / f"{spec.match_id}.jsonl")) is not None:
            logger.debug(f"跳过已完成对局: {spec.match_id}")
            return done
        # 2.运行并写入记录
        async with semaphore:
            return await run_match(spec, plan, backend, run_dir)

    results = await asyncio.gather(*(__match(spec) for spec in specs))
    for spec, result in zip(specs, results):
        if isinstance(result, Exception):
            logger.error(f"对局失败: {spec.match_id} {result}")
    write_manifest(run_dir, plan, specs, results)
    finished = sum(isinstance(r, Transcript) and r.finished for r in results)
    logger.info(f"计划 {plan.plan_id} 完成: {finished}/{len(specs)} 局")
    if isinstance(backend, LLMBackend):
        logger.info(f"缓存命中 {backend.hits}, 未命中 {backend.misses}")
    return results
