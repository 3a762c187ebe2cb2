import argparse
import asyncio
import sys
from collections import Counter
from pathlib import Path

from . import backend_for, run_plan
from .agent import LLMBackend, PolicyId
from .cache import CacheMode, ResponseCache
from .game import EventKind
from .plan import ExperimentPlan, load_plan
from .report import generate
from .transcript import Transcript
from .utils import (
    AUDIT_CACHE_DIR,
    AUDIT_WORKERS,
    CacheIntegrityError,
    ConfigurationError,
    GatewayConfigError,
    IntegrityError,
    TranscriptError,
    logger,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTEGRITY = 0, 2, 3, 4
BACKENDS = ["llm", *(str(p) for p in PolicyId)]


def _plan(args) -> ExperimentPlan:
    plan = load_plan(args.plan)
    update = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.backend is not None:
        update["backend"] = plan.backend.model_copy(update={"kind": args.backend})
    return plan.model_copy(update=update) if update else plan


async def _simulate(args) -> tuple[int, Path]:
    plan = _plan(args)
    run_dir = Path(args.out) / plan.plan_id
    if args.dry_run:
        for spec in plan.matches():
            print(spec.describe())
        print(f"{plan.match_count} matches -> {run_dir}")
        return EXIT_OK, run_dir
    backend = backend_for(plan, CacheMode(args.cache), args.cache_dir)
    try:
        results = await run_plan(plan, backend, run_dir, args.workers)
    finally:
        if isinstance(backend, LLMBackend):
            await backend.gateway.close()
    incomplete = [r for r in results if not isinstance(r, Transcript) or not r.finished]
    if incomplete and not args.allow_partial:
        logger.error(f"{len(incomplete)} 局未完成, 可使用 --allow-partial 忽略")
        return EXIT_DATA, run_dir
    return EXIT_OK, run_dir


def cmd_simulate(args) -> int:
    code, _ = asyncio.run(_simulate(args))
    return code


def cmd_audit(args) -> int:
    code, run_dir = asyncio.run(_simulate(args))
    if code != EXIT_OK or args.dry_run:
        return code
    generate(run_dir, Path(args.out) / "report")
    return EXIT_OK


def cmd_report(args) -> int:
    generate(args.run, args.out)
    return EXIT_OK


def cmd_replay(args) -> int:
    transcript = Transcript.load(args.transcript)
    state = transcript.replay()
    day = 0
    counts: Counter = Counter()
    for event in transcript.events:
        if event.kind is EventKind.DAWN_ANNOUNCEMENT:
            if counts:
                print(f"day {day}: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
            day, counts = day + 1, Counter()
            print(f"day {day}: {event.payload['text']}")
        elif event.kind is EventKind.ELIMINATION:
            print(f"day {day}: Player {event.target} eliminated ({event.payload['cause']})")
        counts[str(event.kind)] += 1
    print(f"day {day}: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    print(f"{transcript.match_id}: {transcript.status}, winner={state.winner}, rounds={state.round}, hash ok")
    return EXIT_OK


def cmd_validate_cache(args) -> int:
    problems = ResponseCache(args.cache_dir, CacheMode.RO).validate()
    for path, reason in problems:
        print(f"{path}: {reason}")
    if problems:
        logger.error(f"缓存损坏记录 {len(problems)} 条")
        return EXIT_INTEGRITY
    print("cache ok")
    return EXIT_OK


def _run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--plan", required=True, help="plan file (JSON)")
    parser.add_argument("--out", default="runs", help="runs root; transcripts go to <out>/<plan_id>")
    parser.add_argument("--backend", choices=BACKENDS, help="override the plan's backend")
    parser.add_argument("--cache", choices=[str(m) for m in CacheMode], default=str(CacheMode.RW))
    parser.add_argument("--cache-dir", default=AUDIT_CACHE_DIR)
    parser.add_argument("--seed", type=int, help="override the plan seed")
    parser.add_argument("--workers", type=int, default=AUDIT_WORKERS)
    parser.add_argument("--allow-partial", action="store_true", help="exit 0 even if matches aborted")
    parser.add_argument("--dry-run", action="store_true", help="print the match schedule only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wolfaudit", description="Werewolf gender-fairness audits")
    sub = parser.add_subparsers(dest="command", required=True)
    _run_flags(sub.add_parser("simulate", help="run a plan and write transcripts"))
    _run_flags(sub.add_parser("audit", help="simulate, then report into <out>/report"))
    report = sub.add_parser("report", help="compute tables and figures from a run directory")
    report.add_argument("--run", required=True, help="run directory with transcripts")
    report.add_argument("--out", required=True)
    replay = sub.add_parser("replay", help="re-drive a transcript and verify its final hash")
    replay.add_argument("transcript")
    cache = sub.add_parser("validate-cache", help="check every cached response digest")
    cache.add_argument("--cache-dir", default=AUDIT_CACHE_DIR)
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "report": cmd_report,
    "replay": cmd_replay,
    "validate-cache": cmd_validate_cache,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, GatewayConfigError) as err:
        logger.error(err)
        return EXIT_USAGE
    except TranscriptError as err:
        logger.error(err)
        return EXIT_DATA
    except (IntegrityError, CacheIntegrityError) as err:
        logger.error(err)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
