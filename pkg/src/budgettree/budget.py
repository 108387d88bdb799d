"""Tool-call and token budget accounting."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

DEFAULT_ALPHA_MAX = 50.0

# (tool calls, tokens for reasoning models, tokens for instruct models)
BUDGET_TIERS: dict[str, tuple[int, int, int]] = {
    "low": (5, 2000, 1000),
    "middle": (10, 4000, 2000),
    "high": (20, 8000, 4000),
}


class BudgetExhausted(RuntimeError):
    pass


def tier_limits(tier: str, family: str = "reasoning", tiers: dict | None = None) -> tuple[int, int]:
    """Return ``(B_tool, B_token)`` for a named tier and model family."""
    tiers = BUDGET_TIERS if tiers is None else tiers
    try:
        tools, reasoning_tokens, instruct_tokens = tiers[tier]
    except KeyError:
        raise ValueError(f"unknown budget tier {tier!r}; expected one of {sorted(tiers)}")
    if family == "reasoning":
        return tools, reasoning_tokens
    if family == "instruct":
        return tools, instruct_tokens
    raise ValueError(f"unknown model family {family!r}")


@dataclass(frozen=True)
class ActionCost:
    tool_cost: int = 0
    token_cost: int = 0

    def __post_init__(self):
        if self.tool_cost not in (0, 1):
            raise ValueError("tool_cost must be 0 or 1")
        if self.token_cost < 0:
            raise ValueError("token_cost must be nonnegative")


@dataclass
class BudgetLedger:
    initial_tool: int
    initial_token: int
    alpha_max: float = DEFAULT_ALPHA_MAX
    remaining_tool: int = -1
    remaining_token: int = -1
    charged_tool: int = 0
    charged_token: int = 0
    clamped: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if self.initial_tool < 0 or self.initial_token < 0:
            raise ValueError("initial budgets must be nonnegative")
        if self.alpha_max < 1:
            raise ValueError("alpha_max must be >= 1")
        if self.remaining_tool < 0:
            self.remaining_tool = self.initial_tool
        if self.remaining_token < 0:
            self.remaining_token = self.initial_token

    @property
    def tools_used(self) -> int:
        return self.initial_tool - self.remaining_tool

    @property
    def tokens_used(self) -> int:
        """Tokens actually generated, including any final overshoot."""
        return self.charged_token

    @property
    def running(self) -> bool:
        return self.remaining_tool > 0 and self.remaining_token > 0

    def charge(self, cost: ActionCost) -> BudgetLedger:
        with self._lock:
            self.charged_tool += cost.tool_cost
            self.charged_token += cost.token_cost
            tool = self.remaining_tool - cost.tool_cost
            token = self.remaining_token - cost.token_cost
            if tool < 0 or token < 0:
                self.clamped = True
            self.remaining_tool = max(0, tool)
            self.remaining_token = max(0, token)
        return self

    def token_ratio(self) -> float:
        if self.initial_token == 0:
            return 0.0
        return self.remaining_token / self.initial_token

    def remaining_ratio(self) -> float:
        """Limiting fraction of budget left; zero-sized dimensions are ignored."""
        ratios = []
        if self.initial_tool > 0:
            ratios.append(self.remaining_tool / self.initial_tool)
        if self.initial_token > 0:
            ratios.append(self.remaining_token / self.initial_token)
        if not ratios or (self.remaining_tool == 0 and self.remaining_token == 0):
            raise BudgetExhausted("both budgets are exhausted")
        return min(ratios)

    def annealing_exponent(self) -> float:
        r = self.remaining_ratio()
        if r <= 0:
            return self.alpha_max
        return min(1.0 / r, self.alpha_max)

    def backstop_due(self, has_answer: bool, eta: float) -> bool:
        if not 0 < eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if has_answer:
            return False
        return self.remaining_tool == 0 or self.token_ratio() <= eta


def remaining_ratio(ledger: BudgetLedger) -> float:
    return ledger.remaining_ratio()


def annealing_exponent(ledger: BudgetLedger) -> float:
    return ledger.annealing_exponent()


def backstop_due(ledger: BudgetLedger, has_answer: bool, eta: float) -> bool:
    return ledger.backstop_due(has_answer, eta)
