"""How the remaining budget sharpens node selection.

As budget drains, the exponent applied to node values grows, so the same
pool of values yields an increasingly greedy distribution.

Run: python3 demos/annealing.py
"""

from __future__ import annotations

from budgettree.budget import ActionCost, BudgetLedger
from budgettree.selector import power_weights

values = [0.3, 0.5, 0.6, 0.7]
ledger = BudgetLedger(initial_tool=10, initial_token=4000)

print("tools  tokens  alpha   selection probabilities")
while ledger.running:
    alpha = ledger.annealing_exponent()
    probs = power_weights(values, alpha)
    print(f"{ledger.remaining_tool:>5} {ledger.remaining_token:>7} {alpha:>6.2f}   " + "  ".join(f"{p:.3f}" for p in probs))
    ledger.charge(ActionCost(1, 350))
