"""Drives one match from seating to the last vote."""

from pathlib import Path

from .agent import AgentBackend, AgentReply, ContextPacket, build_context, decide
from .game import (
    DecisionKind,
    GameState,
    Role,
    elect_sheriff,
    new_game,
    open_statements,
    open_vote,
    record_reliability,
    record_statement,
    resolve_night,
    run_day_vote,
    start_election,
    state_hash,
    statement_order,
)
from .harness import DecisionProbe, probe
from .plan import ExperimentPlan, MatchSpec
from .prompts import TEMPLATE_VERSION, presentation_for, render_prompt
from .transcript import SCHEMA_VERSION, Transcript
from .utils import GatewayConfigError, GatewayError, ReplayError, logger

# failures that abort a match but leave the batch running
ABORTING = (GatewayError, GatewayConfigError, ReplayError)


class MatchDriver:
    def __init__(self, spec: MatchSpec, plan: ExperimentPlan, backend: AgentBackend):
        self.spec = spec
        self.plan = plan
        self.backend = backend
        self.canonical = plan.canonical_template
        self.contexts: dict[int, ContextPacket] = {}
        self.probes: list[DecisionProbe] = []
        self.fallbacks = 0
        self.state: GameState = new_game(
            spec.config, spec.seed, spec.names, spec.match_id, plan.round_cap
        )

    async def ask(self, actor: int, kind: DecisionKind, summary: bool = False) -> AgentReply:
        state = self.state
        context = build_context(state, actor, self.contexts.get(actor))
        self.contexts[actor] = context
        if kind.audited:
            record, reply = await probe(
                state, actor, kind, self.plan.templates_for(kind), self.canonical, self.backend, context
            )
            self.probes.append(record)
            self.fallbacks += sum(arm.reply.fallback for arm in record.variants.values())
            return reply
        pm = presentation_for(self.canonical, actor, state.players)
        prompt = render_prompt(state, actor, kind, pm, context, summary)
        reply = await decide(self.backend, prompt, kind)
        self.fallbacks += reply.fallback
        return reply

    async def elect(self) -> None:
        self.state = start_election(self.state)
        nominations = {}
        for seat in self.state.alive:
            nominations[seat] = (await self.ask(seat, DecisionKind.NOMINATE)).action.target
        self.state = elect_sheriff(self.state, nominations)

    async def night(self) -> None:
        # 1.狼人依座位顺序提名
        kills = []
        for wolf in self.state.seats_with(Role.WEREWOLF):
            kills.append((wolf, (await self.ask(wolf, DecisionKind.SKILL)).action.target))
        # 2.守卫与预言家
        targets = {}
        for role in (Role.GUARD, Role.SEER):
            seats = self.state.seats_with(role)
            targets[role] = (await self.ask(seats[0], DecisionKind.SKILL)).action.target if seats else None
        self.state, _ = resolve_night(self.state, kills, targets[Role.GUARD], targets[Role.SEER])

    async def day(self) -> None:
        state = self.state
        sheriff = state.sheriff if state.sheriff in state.alive else None
        # 1.警长以外的玩家依次发言
        for seat in statement_order(state):
            if seat == sheriff:
                continue
            reply = await self.ask(seat, DecisionKind.STATEMENT)
            self.state = record_statement(self.state, seat, reply.action.text)
        # 2.警长总结前的可信度与投票意向
        for seat in self.state.alive:
            reply = await self.ask(seat, DecisionKind.RELIABILITY)
            self.state = record_reliability(
                self.state, seat, reply.reliability.scores, "pre", reply.action.decision
            )
        # 3.警长总结
        if sheriff is not None:
            reply = await self.ask(sheriff, DecisionKind.STATEMENT, summary=True)
            self.state = record_statement(self.state, sheriff, reply.action.text, summary=True)
        # 4.投票
        self.state = open_vote(self.state)
        ballots = {}
        for seat in self.state.alive:
            reply = await self.ask(seat, DecisionKind.VOTE)
            self.state = record_reliability(
                self.state, seat, reply.reliability.scores, "post", reply.action.decision
            )
            ballots[seat] = reply.action.decision
        self.state = run_day_vote(self.state, ballots)

    async def play(self) -> GameState:
        await self.elect()
        while not self.state.finished:
            await self.night()
            self.state = open_statements(self.state)
            if self.state.finished:
                break
            await self.day()
        return self.state

    def header(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "plan_id": self.plan.plan_id,
            "match_id": self.spec.match_id,
            "seed": self.spec.seed,
            "config": self.spec.config.key if self.spec.config else None,
            "names": list(self.spec.names.names) if self.spec.names else None,
            "template_version": TEMPLATE_VERSION,
            "backend": self.backend.describe(),
            "round_cap": self.plan.round_cap,
            "canonical": str(self.canonical),
            "probe_plan": {
                str(kind): [str(t) for t in self.plan.templates_for(kind)]
                for kind in (DecisionKind.SKILL, DecisionKind.VOTE, DecisionKind.RELIABILITY)
            },
        }

    def transcript(self, status: str, error: str | None = None) -> Transcript:
        return Transcript(
            header=self.header(),
            events=list(self.state.events),
            probes=list(self.probes),
            footer={
                "status": status,
                "winner": self.state.winner and str(self.state.winner),
                "final_hash": state_hash(self.state),
                "rounds": self.state.round,
                "fallbacks": self.fallbacks,
                "error": error,
            },
        )


async def run_match(
    spec: MatchSpec, plan: ExperimentPlan, backend: AgentBackend, out_dir: Path | None = None
) -> Transcript:
    driver = MatchDriver(spec, plan, backend)
    logger.info(f"开始对局: {spec.describe()}")
    try:
        await driver.play()
        transcript = driver.transcript("finished")
    except ABORTING as err:
        logger.error(f"对局中止: {spec.match_id} {err}")
        transcript = driver.transcript("aborted", str(err))
    if out_dir is not None:
        transcript.write(Path(out_dir) / f"{spec.match_id}.jsonl")
    return transcript
