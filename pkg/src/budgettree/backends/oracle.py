"""Simulated world with a guaranteed-progress oracle path.

Every node carries an opaque ``oracle_depth`` in its ``meta``: the number of
oracle steps taken to reach it, or ``None`` once the branch has left the
oracle path. Deepening an on-path node moves one step further along the
path and earns a fixed positive delta; anything else earns the off-path
delta. Only the world reads ``meta``; selection sees values alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..policy import ANSWER, TOOL_CALL, AgentAction
from ..tree import ValueTree

DEFAULT_STEP_TOKENS = 50


@dataclass(frozen=True)
class OracleWorldConfig:
    delta_per_oracle_step: int = 1
    off_path_delta: int = -1
    oracle_depth: int = 64
    branching: int = 1
    step_tokens: int = DEFAULT_STEP_TOKENS

    def __post_init__(self):
        if self.delta_per_oracle_step < 1:
            raise ValueError("oracle steps must make strictly positive progress")
        if self.off_path_delta > 0:
            raise ValueError("off_path_delta must be <= 0")
        if self.oracle_depth < 1 or self.branching < 1:
            raise ValueError("oracle_depth and branching must be positive")


class OracleStep(NamedTuple):
    action_text: str
    observation_text: str
    critic_delta: int
    oracle_depth: int | None


def oracle_step(
    world: OracleWorldConfig,
    node_depth: int | None,
    instruction_kind: str,
    choice: int = 0,
) -> OracleStep:
    """One expansion from a node at oracle depth ``node_depth`` (``None`` = off path).

    ``choice`` picks among ``world.branching`` candidate actions; candidate 0
    is the oracle continuation.
    """
    on_path = node_depth is not None and node_depth < world.oracle_depth
    if on_path and instruction_kind == "deepen" and choice == 0:
        d = node_depth + 1
        return OracleStep(f"oracle hop {d}", f"evidence for hop {d}", world.delta_per_oracle_step, d)
    return OracleStep(f"detour {choice}", "no new evidence", world.off_path_delta, None)


class OracleWorld:
    """Policy implementation backed by :func:`oracle_step`."""

    answer_text = "oracle answer"

    def __init__(self, config: OracleWorldConfig | None = None, seed: int = 0):
        self.config = config or OracleWorldConfig()
        self._rng = np.random.default_rng(seed)

    def plan(self, question: str, tool_limit: int, token_limit: int) -> tuple[str, int]:
        return "", 0

    @staticmethod
    def depth_of(tree: ValueTree, node: int) -> int | None:
        n = tree[node]
        if n.parent_id is None:
            return 0
        return n.meta.get("oracle_depth")

    def propose(self, tree: ValueTree, node: int, instruction: str, plan: str) -> AgentAction:
        cfg = self.config
        if instruction in ("answer", "backstop_answer"):
            return AgentAction(ANSWER, token_usage=cfg.step_tokens, answer_text=self.answer_text)
        choice = int(self._rng.integers(cfg.branching)) if cfg.branching > 1 else 0
        step = oracle_step(cfg, self.depth_of(tree, node), instruction, choice)
        return AgentAction(
            TOOL_CALL,
            raw_text=step.action_text,
            token_usage=cfg.step_tokens,
            tool_name="search",
            tool_args={"query": step.action_text},
            meta={"oracle_depth": step.oracle_depth, "oracle_delta": step.critic_delta, "observation": step.observation_text},
        )

    def execute(self, action: AgentAction) -> tuple[str, bool]:
        return action.meta.get("observation", ""), True

    def critique(self, tree: ValueTree, node: int, action: AgentAction, observation: str) -> tuple[int, int]:
        return int(action.meta["oracle_delta"]), 0


def oracle_steps_required(tau: float, start_value: float, delta: float) -> int:
    """Oracle steps needed to lift ``start_value`` to ``tau``: ceil((tau - v0) / delta)."""
    return math.ceil(round((tau - start_value) / delta, 9))


def expansion_bound(k: int, p_min: float, eps: float) -> float:
    """Expansions that make a frontier miss rate of at most ``eps`` certain."""
    log_inv = math.log(1.0 / eps)
    return (k + math.sqrt(2 * k * log_inv) + 2 * log_inv) / p_min


def chernoff_tail(m: int, p_min: float, k: int) -> float:
    x = m * p_min
    if x <= k:
        return 1.0
    return math.exp(-((x - k) ** 2) / (2 * x))
