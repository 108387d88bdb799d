"""Estimated spend per question at each budget tier, for both model families.

Run: python3 demos/cost_table.py
"""

from __future__ import annotations

from budgettree.budget import BUDGET_TIERS, tier_limits
from budgettree.costs import PRICING

print(f"{'family':<10} {'tier':<7} {'tools':>5} {'tokens':>6} {'USD':>9}")
for family, pricing in PRICING.items():
    for tier in BUDGET_TIERS:
        tools, tokens = tier_limits(tier, family)
        print(f"{family:<10} {tier:<7} {tools:>5} {tokens:>6} {pricing.cost(tools, tokens):>9.5f}")
