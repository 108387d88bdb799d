"""Success rate of the search in the simulated oracle world, by budget.

The oracle world rewards exactly one child per node; the search has to
find seven such steps in a row. Small budgets rarely manage it, and the
analytic bound is astronomically conservative.

Run: python3 demos/convergence.py
"""

from __future__ import annotations

from budgettree.simulation import SweepSpec, run_sweep

spec = SweepSpec(budgets=[7, 8, 12, 16, 24, 32, "M"], trials=300)
bound = spec.bound()
print(f"steps needed K={bound.k}, per-step floor {bound.p_min:.2e}, bound M={bound.m:.3e}\n")
for point in run_sweep(spec):
    label = "M" if point.budget == bound.budget else str(point.budget)
    bar = "#" * round(40 * point.rate)
    print(f"{label:>4} {point.rate:6.3f} {bar}")
