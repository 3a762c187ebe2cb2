from ..cache import ResponseCache
from ..game import DecisionKind
from ..gateway import LLMGateway
from ..prompts import PromptText
from ..utils import AUDIT_LLM_MODEL, ConfigurationError, ReplyParseError, ReplyValidationError, logger
from .backend import AgentBackend, LLMBackend, ScriptedBackend
from .context import ContextPacket, StatementClass, build_context, classify_statement
from .reply import (
    MARKER,
    Action,
    AgentReply,
    ReliabilityVector,
    fallback_reply,
    format_reply,
    parse_reply,
)
from .scripted import PolicyId, scripted_policy

__all__ = [
    "AgentBackend",
    "LLMBackend",
    "ScriptedBackend",
    "ContextPacket",
    "StatementClass",
    "build_context",
    "classify_statement",
    "MARKER",
    "Action",
    "AgentReply",
    "ReliabilityVector",
    "fallback_reply",
    "format_reply",
    "parse_reply",
    "PolicyId",
    "scripted_policy",
    "decide",
    "make_backend",
]

CORRECTION_NOTE = (
    "Your previous reply could not be used ({reason}). Reply again and end it "
    f"with the {MARKER} block exactly as described above."
)


async def decide(backend: AgentBackend, prompt: PromptText, kind: DecisionKind) -> AgentReply:
    """Ask, re-ask once with a correction note, then fall back."""
    view = prompt.view
    current = prompt
    raw = ""
    for attempt in range(2):
        raw = await backend.respond(current, kind)
        try:
            return parse_reply(
                raw,
                kind,
                view.alive,
                owner=view.actor,
                verb=view.verb,
                legal=view.legal_targets or None,
            )
        except (ReplyParseError, ReplyValidationError) as err:
            logger.warning(f"回复无效 seat {view.actor} {kind} 第{attempt + 1}次: {err.msg}")
            current = prompt.with_note(CORRECTION_NOTE.format(reason=err.msg))
    logger.warning(f"使用兜底决策 seat {view.actor} {kind}")
    return fallback_reply(kind, view.verb, view.legal_targets, view.others, raw)


def make_backend(
    name: str,
    *,
    cache: ResponseCache | None = None,
    gateway: LLMGateway | None = None,
    model: str | None = None,
    temperature: float = 0.0,
    max_tokens: int = 1024,
) -> AgentBackend:
    if name in [str(p) for p in PolicyId]:
        return ScriptedBackend(name)
    if name != "llm":
        raise ConfigurationError("未知的后端", name)
    model = model or AUDIT_LLM_MODEL
    if not model:
        raise ConfigurationError("缺少模型名称", "AUDIT_LLM_MODEL")
    return LLMBackend(
        gateway or LLMGateway.from_env(),
        cache or ResponseCache(),
        model,
        temperature,
        max_tokens,
    )
