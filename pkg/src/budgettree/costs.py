"""Dollar-cost estimates for a run's tool calls and generated tokens."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PricingModel:
    """USD rates. Input tokens are not metered per call; they are assumed to
    be ``input_output_ratio`` times the output volume."""

    input_rate_per_mtok: float
    output_rate_per_mtok: float
    search_rate_per_query: float = 0.005
    input_output_ratio: float = 10.0

    def __post_init__(self):
        if min(self.input_rate_per_mtok, self.output_rate_per_mtok, self.search_rate_per_query, self.input_output_ratio) < 0:
            raise ValueError("pricing rates must be nonnegative")

    def cost(self, tools_used: int, tokens_used: int) -> float:
        search = tools_used * self.search_rate_per_query
        output = tokens_used * self.output_rate_per_mtok / 1e6
        inputs = tokens_used * self.input_output_ratio * self.input_rate_per_mtok / 1e6
        return search + output + inputs


# Per-1M-token API rates for the two reference model families.
PRICING = {
    "reasoning": PricingModel(input_rate_per_mtok=0.03, output_rate_per_mtok=0.14),
    "instruct": PricingModel(input_rate_per_mtok=0.08, output_rate_per_mtok=0.28),
}


def estimate_cost(report, pricing: PricingModel) -> float:
    """Cost of a report-like object exposing ``tools_used`` and ``tokens_used``."""
    return pricing.cost(report.tools_used, report.tokens_used)
