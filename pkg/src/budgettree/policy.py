"""Agent actions and the prompt-driven policy over chat and retrieval backends.

The engine talks to any object with ``plan``, ``propose``, ``execute`` and
``critique`` methods. :class:`LLMPolicy` implements them with the packaged
prompts; the oracle world in :mod:`budgettree.backends.oracle` implements
them directly.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Protocol

from . import critic, prompts
from .backends.chat import SEARCH_TOOL_SCHEMA, BackendError, ChatBackend, ChatRequest, ChatResponse, Sampling
from .backends.retrieval import DEFAULT_K, Retriever
from .tree import ValueTree

log = logging.getLogger(__name__)

TOOL_CALL = "tool_call"
ANSWER = "answer"
REASONING = "reasoning_only"

GENERATOR_OBSERVATION_CHARS = 2000


@dataclass
class AgentAction:
    kind: str
    raw_text: str = ""
    token_usage: int = 0
    tool_name: str = ""
    tool_args: dict[str, str] = field(default_factory=dict)
    answer_text: str = ""
    anomaly: str = ""
    # Opaque environment state carried onto the resulting node.
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (TOOL_CALL, ANSWER, REASONING):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if (self.kind == ANSWER) != bool(self.answer_text):
            raise ValueError("answer_text must be non-empty exactly for answer actions")

    def describe(self) -> str:
        if self.kind == TOOL_CALL:
            args = ", ".join(f"{k}={json.dumps(v, ensure_ascii=False)}" for k, v in self.tool_args.items())
            return f"{self.tool_name}({args})"
        if self.kind == ANSWER:
            return f"<answer>{self.answer_text}</answer>"
        return self.raw_text.strip()[:600]


class Policy(Protocol):
    def plan(self, question: str, tool_limit: int, token_limit: int) -> tuple[str, int]: ...

    def propose(self, tree: ValueTree, node: int, instruction: str, plan: str) -> AgentAction: ...

    def execute(self, action: AgentAction) -> tuple[str, bool]: ...

    def critique(self, tree: ValueTree, node: int, action: AgentAction, observation: str) -> tuple[int, int]: ...


_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL | re.IGNORECASE)
_CALL_BLOCKS = (
    re.compile(r"<tool_call>\s*(\{.*?\})\s*</tool_call>", re.DOTALL),
    re.compile(r"```(?:tool_call|tool|json)?\s*(\{.*?\})\s*```", re.DOTALL),
)


def _fenced_call(text: str) -> tuple[str, dict[str, str]] | None:
    for pattern in _CALL_BLOCKS:
        for m in pattern.finditer(text):
            try:
                obj = json.loads(m.group(1))
            except json.JSONDecodeError:
                continue
            if not isinstance(obj, dict) or "name" not in obj:
                continue
            args = obj.get("arguments", obj.get("args", obj.get("parameters", {})))
            if isinstance(args, str):
                try:
                    args = json.loads(args)
                except json.JSONDecodeError:
                    args = {"query": args}
            if not isinstance(args, dict):
                continue
            return str(obj["name"]), {k: str(v) for k, v in args.items()}
    return None


def parse_action(
    generator_output: str,
    native_call: tuple[str, dict[str, str]] | None = None,
    token_usage: int = 0,
) -> AgentAction:
    """Classify one generator turn as an answer, a tool call or plain reasoning.

    An ``<answer>`` span wins over a tool call when both appear.
    """
    text = generator_output or ""
    call = native_call or _fenced_call(text)
    for m in _ANSWER_RE.finditer(text):
        answer = m.group(1).strip()
        if answer:
            anomaly = "answer and tool call in one turn" if call else ""
            if anomaly:
                log.warning("generator emitted both a tool call and an answer; keeping the answer")
            return AgentAction(ANSWER, text, token_usage, answer_text=answer, anomaly=anomaly)
    if call:
        return AgentAction(TOOL_CALL, text, token_usage, tool_name=call[0], tool_args=dict(call[1]))
    return AgentAction(REASONING, text, token_usage)


def forced_answer_text(action: AgentAction) -> str:
    """Answer text for a backstop turn, falling back to the last non-empty line."""
    if action.kind == ANSWER:
        return action.answer_text
    for line in reversed(action.raw_text.strip().splitlines()):
        line = _ANSWER_RE.sub(r"\1", line).strip()
        if line:
            return line
    return ""


def budget_hint(tool_limit: int, token_limit: int) -> str:
    return (
        f"Budget: at most {tool_limit} tool calls and {token_limit} output tokens in total. "
        "Plan so the question can be answered within this budget."
    )


def _clip(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[:limit] + " ..."


class LLMPolicy:
    def __init__(
        self,
        chat: ChatBackend,
        tool: Retriever | None,
        *,
        family: str = "reasoning",
        max_output_tokens: int = 512,
        history_window: int = critic.DEFAULT_HISTORY_WINDOW,
        retrieval_k: int = DEFAULT_K,
        critic_sampling: Sampling | None = None,
    ):
        self.chat = chat
        self.tool = tool
        self.sampling = Sampling.for_family(family)
        self.critic_sampling = critic_sampling or self.sampling
        self.max_output_tokens = max_output_tokens
        self.history_window = history_window
        self.retrieval_k = retrieval_k
        self.parse_failures = 0

    def _call(self, purpose: str, system: str, user: str, *, tools=None, sampling=None) -> ChatResponse:
        req = ChatRequest(
            messages=[("system", system), ("user", user)],
            max_output_tokens=self.max_output_tokens,
            sampling=sampling or self.sampling,
            tools_schema=tools,
            purpose=purpose,
        )
        return self.chat.complete(req)

    def plan(self, question: str, tool_limit: int, token_limit: int) -> tuple[str, int]:
        system = prompts.planner_prompt(question, budget_hint(tool_limit, token_limit))
        resp = self._call("planner", system, f"Question: {question}")
        return resp.content.strip(), resp.completion_tokens

    def context(self, tree: ValueTree, node: int, plan: str) -> str:
        parts = [f"Question: {tree.question}"]
        if plan:
            parts.append(f"Plan:\n{plan}")
        steps = tree.path(node)[1:]
        if steps:
            lines = ["History:"]
            for n in steps:
                lines.append(f"Step {n.depth}")
                lines.append(f"Action: {n.action_text}")
                if n.observation_text:
                    lines.append(f"Observation: {_clip(n.observation_text, GENERATOR_OBSERVATION_CHARS)}")
            parts.append("\n".join(lines))
        return "\n\n".join(parts)

    def propose(self, tree: ValueTree, node: int, instruction: str, plan: str) -> AgentAction:
        system = prompts.generator_prompt(instruction)
        tools = None if instruction == "backstop_answer" else SEARCH_TOOL_SCHEMA
        resp = self._call("generator", system, self.context(tree, node, plan), tools=tools)
        return parse_action(resp.content, resp.tool_call, resp.completion_tokens)

    def execute(self, action: AgentAction) -> tuple[str, bool]:
        if self.tool is None:
            return "Tool error: no tool backend configured.", False
        if action.tool_name != "search":
            return f"Tool error: unknown tool {action.tool_name!r}.", False
        query = action.tool_args.get("query", "").strip()
        try:
            result = self.tool.retrieve(query, self.retrieval_k)
        except (BackendError, ValueError) as exc:
            return f"Tool error: {exc}", False
        return result.format(), True

    def critique(self, tree: ValueTree, node: int, action: AgentAction, observation: str) -> tuple[int, int]:
        user = critic.build_critic_prompt(
            tree, node, self.history_window, latest_action=action.describe(), latest_observation=observation
        )
        system = prompts.critic_prompt()
        tokens = 0
        for attempt in range(2):
            msg = user if attempt == 0 else f"{user}\n\n{critic.RETRY_REMINDER}"
            resp = self._call("critic", system, msg, sampling=self.critic_sampling)
            tokens += resp.completion_tokens
            try:
                return critic.parse_delta(resp.content), tokens
            except critic.CriticParseError:
                self.parse_failures += 1
                log.info("critic output unparsable (attempt %d)", attempt + 1)
        return critic.FALLBACK_DELTA, tokens
