"""Grow a small value tree by hand and watch values flow back to the root.

Run: python3 demos/tree_basics.py
"""

from __future__ import annotations

from budgettree.critic import apply_delta, route_kind
from budgettree.tree import INTERMEDIATE, TERMINAL, ValueTree

tree = ValueTree("Which river flows through the capital of France?")
root = tree.root

# Two searches from the root: one helpful (+3), one not (-1).
good_value = apply_delta(root.current_value, 3)
good = tree.add_child(0, INTERMEDIATE, 'search(query="capital of France")', "Paris ...", good_value)
bad = tree.add_child(0, INTERMEDIATE, 'search(query="French rivers")', "Loire ...", apply_delta(root.current_value, -1))
print(f"helpful step -> value {good_value:.2f}, routed {route_kind(root.current_value, good_value)}")
print(f"unhelpful step -> value {tree[bad].original_value:.2f}, routed {route_kind(root.current_value, tree[bad].original_value)}")

# Going deeper on the helpful branch crosses the answer threshold.
deep_value = apply_delta(good_value, 4)
deep = tree.add_child(good, INTERMEDIATE, 'search(query="river Paris")', "Seine ...", deep_value)
print(f"deeper step -> value {deep_value:.2f}, routed {route_kind(good_value, deep_value)}")

tree.add_child(deep, TERMINAL, "<answer>Seine</answer>", "", tree[deep].current_value, answer_text="Seine")
tree.backpropagate()
print("\nafter backpropagation:")
for line in tree.dump_lines():
    print(" ", line)
print("best answer:", tree.best_answer())
