"""Chat-completions client over HTTP JSON.

Wire format (request body posted to ``{base_url}/chat/completions``)::

    {"model": str, "messages": [{"role": str, "content": str}, ...],
     "max_tokens": int, "temperature": float, "top_p": float, "top_k": int,
     "tools": [...]}                       # tools only when declared

Response fields read: ``choices[0].message.content``,
``choices[0].message.tool_calls[0].function.{name, arguments}``,
``choices[0].finish_reason`` and ``usage.completion_tokens``.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

log = logging.getLogger(__name__)

DEFAULT_MAX_OUTPUT_TOKENS = 512
DEFAULT_TIMEOUT = 120.0
RETRY_DELAYS = (0.5, 2.0)

ENV_CHAT_URL = "BUDGETTREE_CHAT_URL"
ENV_CHAT_KEY = "BUDGETTREE_CHAT_KEY"
ENV_CHAT_MODEL = "BUDGETTREE_CHAT_MODEL"

# temperature, top_p, top_k
SAMPLING_DEFAULTS = {
    "instruct": (0.7, 0.8, 20),
    "reasoning": (1.0, 1.0, 0),
}

SEARCH_TOOL_SCHEMA = [
    {
        "type": "function",
        "function": {
            "name": "search",
            "description": "Retrieve the top passages for a query from the knowledge corpus.",
            "parameters": {
                "type": "object",
                "properties": {"query": {"type": "string", "description": "Search query."}},
                "required": ["query"],
            },
        },
    }
]


class BackendError(RuntimeError):
    """A backend call failed and should not be retried further."""


class TransportError(BackendError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Sampling:
    temperature: float = 1.0
    top_p: float = 1.0
    top_k: int = 0

    @classmethod
    def for_family(cls, family: str) -> Sampling:
        return cls(*SAMPLING_DEFAULTS[family])


@dataclass
class ChatRequest:
    messages: list[tuple[str, str]]
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    sampling: Sampling = field(default_factory=Sampling)
    tools_schema: list[dict] | None = None
    # Caller role label ("generator", "critic", "planner"); not sent on the wire.
    purpose: str = ""

    def __post_init__(self):
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant", "tool"):
                raise ValueError(f"invalid message role {role!r}")

    @property
    def system(self) -> str:
        return "\n".join(c for r, c in self.messages if r == "system")

    @property
    def text(self) -> str:
        return "\n".join(c for _, c in self.messages)


@dataclass
class ChatResponse:
    content: str
    completion_tokens: int
    finish_reason: str = "stop"
    tool_call: tuple[str, dict[str, Any]] | None = None


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def estimate_tokens(text: str) -> int:
    """Local fallback count for backends that omit usage."""
    return len(_TOKEN_RE.findall(text or ""))


def parse_completion(payload: dict) -> ChatResponse:
    try:
        choice = payload["choices"][0]
    except (KeyError, IndexError, TypeError):
        raise BackendError("response has no choices")
    message = choice.get("message") or {}
    content = message.get("content") or ""
    tool_call = None
    calls = message.get("tool_calls") or []
    if calls:
        fn = calls[0].get("function") or {}
        args = fn.get("arguments") or {}
        if isinstance(args, str):
            try:
                args = json.loads(args) if args.strip() else {}
            except json.JSONDecodeError:
                args = {"query": args}
        if not isinstance(args, dict):
            args = {"query": str(args)}
        tool_call = (fn.get("name") or "", {k: str(v) for k, v in args.items()})
    usage = payload.get("usage") or {}
    tokens = usage.get("completion_tokens")
    if tokens is None:
        tokens = estimate_tokens(content) + (estimate_tokens(json.dumps(tool_call[1])) if tool_call else 0)
    return ChatResponse(
        content=content,
        completion_tokens=int(tokens),
        finish_reason=choice.get("finish_reason") or "stop",
        tool_call=tool_call,
    )


class HttpChatClient:
    """Synchronous chat-completions client; safe to share across threads."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        *,
        timeout: float = DEFAULT_TIMEOUT,
        retry_delays: tuple[float, ...] = RETRY_DELAYS,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        base_url = base_url or os.environ.get(ENV_CHAT_URL) or os.environ.get("OPENAI_BASE_URL")
        if not base_url:
            raise BackendError(f"no chat endpoint configured; set {ENV_CHAT_URL}")
        self.base_url = base_url.rstrip("/")
        self.model = model or os.environ.get(ENV_CHAT_MODEL, "default")
        key = api_key if api_key is not None else os.environ.get(ENV_CHAT_KEY) or os.environ.get("OPENAI_API_KEY", "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self.retry_delays = tuple(retry_delays)
        self._sleep = sleep
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    def body(self, request: ChatRequest) -> dict:
        out = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "max_tokens": request.max_output_tokens,
            "temperature": request.sampling.temperature,
            "top_p": request.sampling.top_p,
            "top_k": request.sampling.top_k,
        }
        if request.tools_schema:
            out["tools"] = request.tools_schema
        return out

    def complete(self, request: ChatRequest) -> ChatResponse:
        url = f"{self.base_url}/chat/completions"
        body = self.body(request)
        attempts = len(self.retry_delays) + 1
        last: TransportError | None = None
        for attempt in range(attempts):
            try:
                resp = self._client.post(url, json=body)
            except httpx.HTTPError as exc:
                last = TransportError(f"chat transport error: {exc}")
            else:
                if resp.status_code == 200:
                    try:
                        payload = resp.json()
                    except ValueError:
                        raise BackendError("chat endpoint returned a non-JSON body")
                    return parse_completion(payload)
                last = TransportError(f"chat endpoint returned HTTP {resp.status_code}", resp.status_code)
                if resp.status_code < 500 and resp.status_code != 429:
                    raise last
            if attempt < attempts - 1:
                log.warning("chat call failed (%s); retrying", last)
                self._sleep(self.retry_delays[attempt])
        assert last is not None
        raise last

    def close(self) -> None:
        self._client.close()
