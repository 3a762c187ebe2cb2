from abc import ABC, abstractmethod

from ..cache import ResponseCache
from ..game import DecisionKind
from ..gateway import ChatMessage, ChatRequest, LLMGateway
from ..prompts import PromptText
from ..utils import logger
from .scripted import PolicyId, scripted_policy


class AgentBackend(ABC):
    name: str = ""

    @abstractmethod
    async def respond(self, prompt: PromptText, kind: DecisionKind) -> str:
        """Raw reply text for one prompt."""

    def describe(self) -> dict:
        return {"backend": self.name}


class ScriptedBackend(AgentBackend):
    def __init__(self, policy: PolicyId | str):
        self.policy = PolicyId(policy)
        self.name = str(self.policy)

    async def respond(self, prompt: PromptText, kind: DecisionKind) -> str:
        return scripted_policy(self.policy, prompt.view)


class LLMBackend(AgentBackend):
    name = "llm"

    def __init__(
        self,
        gateway: LLMGateway,
        cache: ResponseCache,
        model: str,
        temperature: float = 0.0,
        max_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.cache = cache
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.hits = 0
        self.misses = 0

    def request_for(self, prompt: PromptText) -> ChatRequest:
        return ChatRequest(
            model=self.model,
            messages=(
                ChatMessage("system", prompt.system_rules),
                ChatMessage("user", f"{prompt.context_block}\n\n{prompt.task_block}\n"),
            ),
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )

    async def respond(self, prompt: PromptText, kind: DecisionKind) -> str:
        req = self.request_for(prompt)
        text, hit = await self.gateway.cached_complete(req, self.cache)
        if hit:
            self.hits += 1
        else:
            self.misses += 1
            logger.debug(f"模型回复 {kind} seat {prompt.view.actor}: {prompt.content_hash[:12]}")
        return text

    def describe(self) -> dict:
        return {
            "backend": self.name,
            "model": self.model,
            "temperature": float(self.temperature),
            "max_tokens": self.max_tokens,
        }
