"""Client for OpenAI-compatible ``/chat/completions`` endpoints."""

import asyncio
import time
from dataclasses import dataclass
from functools import cached_property

import httpx
import orjson
from tenacity import (
    AsyncRetrying,
    RetryCallState,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from .cache import CacheMode, ResponseCache, request_digest
from .utils import (
    AUDIT_LLM_API_KEY,
    AUDIT_LLM_BASE_URL,
    AUDIT_LLM_MODEL,
    AUDIT_LLM_RATE,
    AUDIT_LLM_TIMEOUT,
    GatewayConfigError,
    GatewayError,
    ReplayError,
    dumps,
    logger,
)

MAX_ATTEMPTS = 5
BACKOFF_BASE = 1.0


class TransientGatewayError(GatewayError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise GatewayConfigError("消息角色错误", self.role)


@dataclass(frozen=True)
class CacheKey:
    digest: str


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 1024

    @cached_property
    def payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": float(self.temperature),
            "max_tokens": int(self.max_tokens),
        }

    @cached_property
    def key(self) -> CacheKey:
        return CacheKey(request_digest(self.payload))


class TokenBucket:
    def __init__(self, rate: float, capacity: float | None = None):
        self.rate = rate
        self.capacity = capacity or max(1.0, rate)
        self.tokens = self.capacity
        self.updated = time.monotonic()
        self._lock = asyncio.Lock()

    async def acquire(self) -> None:
        if self.rate <= 0:
            return
        async with self._lock:
            while True:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                await asyncio.sleep((1 - self.tokens) / self.rate)


def _log_retry(state: RetryCallState) -> None:
    logger.warning(
        f"请求失败, 第{state.attempt_number}次重试前等待 {state.next_action.sleep:.1f}s: "
        f"{state.outcome.exception()}"
    )


class LLMGateway:
    def __init__(
        self,
        base_url: str,
        api_key: str,
        *,
        rate: float = AUDIT_LLM_RATE,
        timeout: float = AUDIT_LLM_TIMEOUT,
        max_attempts: int = MAX_ATTEMPTS,
        backoff_base: float = BACKOFF_BASE,
        transport: httpx.AsyncBaseTransport | None = None,
    ):
        if not base_url:
            raise GatewayConfigError("缺少接口地址", "AUDIT_LLM_BASE_URL")
        self.base_url = base_url
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.limiter = TokenBucket(rate)
        self.calls = 0
        self.client = httpx.AsyncClient(
            base_url=base_url,
            headers={"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"},
            http2=transport is None,
            timeout=timeout,
            transport=transport,
        )

    @classmethod
    def from_env(cls, **kwargs) -> "LLMGateway":
        if not AUDIT_LLM_API_KEY:
            raise GatewayConfigError("缺少接口密钥", "AUDIT_LLM_API_KEY")
        return cls(AUDIT_LLM_BASE_URL, AUDIT_LLM_API_KEY, **kwargs)

    @staticmethod
    def default_model() -> str:
        return AUDIT_LLM_MODEL

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc):
        await self.close()

    async def close(self) -> None:
        await self.client.aclose()

    async def _post(self, req: ChatRequest) -> str:
        await self.limiter.acquire()
        self.calls += 1
        try:
            r = await self.client.post("/chat/completions", content=dumps(req.payload))
        except httpx.TransportError as e:
            raise TransientGatewayError("网络错误", self.base_url, e)
        if r.status_code == 429 or r.status_code >= 500:
            raise TransientGatewayError(f"服务暂时不可用 {r.status_code}", self.base_url, r.text)
        if r.status_code >= 400:
            raise GatewayConfigError(f"请求被拒绝 {r.status_code}", self.base_url, r.text)
        try:
            return orjson.loads(r.content)["choices"][0]["message"]["content"]
        except (orjson.JSONDecodeError, KeyError, IndexError, TypeError) as e:
            raise TransientGatewayError("回复格式错误", self.base_url, e)

    async def complete(self, req: ChatRequest) -> str:
        try:
            async for attempt in AsyncRetrying(
                stop=stop_after_attempt(self.max_attempts),
                wait=wait_exponential(multiplier=self.backoff_base, exp_base=2),
                retry=retry_if_exception_type(TransientGatewayError),
                before_sleep=_log_retry,
                reraise=True,
            ):
                with attempt:
                    return await self._post(req)
        except TransientGatewayError as err:
            raise GatewayError(f"重试{self.max_attempts}次后仍失败", self.base_url, err)

    async def cached_complete(self, req: ChatRequest, cache: ResponseCache) -> tuple[str, bool]:
        digest = req.key.digest
        cached = cache.get(digest)
        if cached is not None:
            return cached, True
        if cache.mode is CacheMode.RO:
            raise ReplayError("只读缓存未命中", digest)
        text = await self.complete(req)
        cache.set(digest, req.payload, text)
        return text, False
