"""Residual value critique: delta parsing, bounded value update, routing."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from . import prompts
from .tree import VALUE_MAX, VALUE_MIN, ValueTree

DELTA_MIN = -4
DELTA_MAX = 4
DEFAULT_TAU = 0.8
DEFAULT_HISTORY_WINDOW = 8
OBSERVATION_CHARS = 600
FALLBACK_DELTA = -1
RETRY_REMINDER = "Output ONLY the JSON object."

INSTRUCTION_KINDS = ("answer", "widen", "deepen", "backstop_answer")


class CriticParseError(ValueError):
    pass


@dataclass(frozen=True)
class CriticVerdict:
    raw_delta: int
    new_value: float

    @property
    def normalized_delta(self) -> float:
        return self.raw_delta / 10


@dataclass(frozen=True)
class StepInstruction:
    kind: str
    prompt_text: str

    @classmethod
    def of(cls, kind: str) -> StepInstruction:
        return cls(kind, prompts.instruction_text(kind))


_PLUS_NUMBER = re.compile(r'("delta"\s*:\s*)\+(\d)')
_INT_STRING = re.compile(r"^\s*[+-]?\d+\s*$")


def _coerce_delta(value) -> int:
    if isinstance(value, bool):
        raise CriticParseError("delta is a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and _INT_STRING.match(value):
        return int(value)
    raise CriticParseError(f"delta {value!r} is not an integer")


def parse_delta(critic_output: str) -> int:
    """Integer ``delta`` from the first JSON object carrying one, clipped to [-4, 4]."""
    text = _PLUS_NUMBER.sub(r"\1\2", critic_output or "")
    decoder = json.JSONDecoder()
    pos = text.find("{")
    while pos != -1:
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict) and "delta" in obj:
            delta = _coerce_delta(obj["delta"])
            return max(DELTA_MIN, min(DELTA_MAX, delta))
        pos = text.find("{", pos + 1)
    raise CriticParseError("no JSON object with a delta field")


def clamp_value(value: float) -> float:
    return max(VALUE_MIN, min(VALUE_MAX, value))


def apply_delta(parent_value: float, raw_delta: int) -> float:
    if not VALUE_MIN <= parent_value <= VALUE_MAX:
        raise ValueError(f"parent value {parent_value!r} outside [{VALUE_MIN}, {VALUE_MAX}]")
    if not DELTA_MIN <= raw_delta <= DELTA_MAX:
        raise ValueError(f"raw delta {raw_delta!r} outside [{DELTA_MIN}, {DELTA_MAX}]")
    # Rounding keeps repeated +0.1 steps exact, e.g. seven steps from 0.1 land on 0.8.
    return clamp_value(round(parent_value + raw_delta / 10, 10))


def verdict(parent_value: float, raw_delta: int) -> CriticVerdict:
    return CriticVerdict(raw_delta, apply_delta(parent_value, raw_delta))


def route_kind(parent_value: float, child_value: float, tau: float = DEFAULT_TAU) -> str:
    if child_value >= tau:
        return "answer"
    if child_value <= parent_value:
        return "widen"
    return "deepen"


def route(parent_value: float, child_value: float, tau: float = DEFAULT_TAU) -> StepInstruction:
    return StepInstruction.of(route_kind(parent_value, child_value, tau))


def raw_scale(value: float) -> str:
    return f"{round(value * 10, 4):g}"


def _clip(text: str, limit: int) -> str:
    text = text or ""
    return text if len(text) <= limit else text[:limit] + " ..."


def build_critic_prompt(
    tree: ValueTree,
    node: int,
    history_window: int = DEFAULT_HISTORY_WINDOW,
    *,
    latest_action: str | None = None,
    latest_observation: str | None = None,
    observation_chars: int = OBSERVATION_CHARS,
) -> str:
    """User message for scoring a step taken from ``node``.

    ``node`` is the state that was expanded; its current value is the
    previous absolute value. The history is the root-to-node path, limited
    to the most recent ``history_window`` steps.
    """
    if history_window < 1:
        raise ValueError("history_window must be positive")
    steps = tree.path(node)[1:]
    steps = steps[-history_window:]
    lines = [
        f"Question: {tree.question}",
        "",
        f"Previous value: {raw_scale(tree[node].current_value)}",
        "",
        "Step history (actions, observations, values):",
    ]
    if not steps:
        lines.append("(none)")
    for n in steps:
        lines.append(f"Step {n.depth}")
        lines.append(f"Action: {n.action_text}")
        lines.append(f"Observation: {_clip(n.observation_text, observation_chars)}")
        lines.append(f"Value: {raw_scale(n.original_value)}")
    if latest_action is not None:
        lines += [
            "",
            "Latest action to evaluate:",
            f"Action: {latest_action}",
            f"Observation: {_clip(latest_observation or '', observation_chars)}",
        ]
    return "\n".join(lines)
