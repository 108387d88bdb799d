"""Search-tree data model and bottom-up value backpropagation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

VALUE_MIN = 0.1
VALUE_MAX = 1.0

ROOT = "root"
INTERMEDIATE = "intermediate"
TERMINAL = "terminal_answer"
NODE_KINDS = (ROOT, INTERMEDIATE, TERMINAL)


def rank_key(value: float) -> float:
    """Value used for argmax comparisons.

    Averages built in different summation orders can differ in the last
    bits; rounding first lets the smallest-id tie-break apply to them.
    """
    return round(value, 9)


class TreeError(ValueError):
    pass


def _check_value(value: float) -> float:
    if not VALUE_MIN <= value <= VALUE_MAX:
        raise TreeError(f"node value {value!r} outside [{VALUE_MIN}, {VALUE_MAX}]")
    return float(value)


@dataclass
class SearchNode:
    id: int
    parent_id: int | None
    kind: str
    original_value: float
    current_value: float
    action_text: str = ""
    observation_text: str = ""
    answer_text: str = ""
    step_index: int = 0
    depth: int = 0
    # Instruction implied by this node's own critique (answer/widen/deepen).
    instruction: str = "deepen"
    child_ids: list[int] = field(default_factory=list)
    # Opaque environment state; never read by selection or valuation.
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


class ValueTree:
    """A single-question search tree.

    Node ids are assigned in creation order starting at 0, so the root is
    always node 0 and ``id`` doubles as step provenance.
    """

    def __init__(self, question: str, initial_value: float = VALUE_MIN) -> None:
        value = _check_value(initial_value)
        self.question = question
        root = SearchNode(
            id=0,
            parent_id=None,
            kind=ROOT,
            original_value=value,
            current_value=value,
        )
        self.nodes: dict[int, SearchNode] = {0: root}
        self.root_id = 0
        self.answer_ids: set[int] = set()

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: int) -> SearchNode:
        return self.nodes[node_id]

    def __iter__(self) -> Iterator[SearchNode]:
        return iter(self.nodes.values())

    @property
    def root(self) -> SearchNode:
        return self.nodes[self.root_id]

    def add_child(
        self,
        parent: int,
        kind: str,
        action_text: str,
        observation_text: str,
        value: float,
        *,
        answer_text: str = "",
        step_index: int | None = None,
        instruction: str = "deepen",
        meta: dict[str, Any] | None = None,
    ) -> int:
        if parent not in self.nodes:
            raise TreeError(f"unknown parent node {parent}")
        if kind not in (INTERMEDIATE, TERMINAL):
            raise TreeError(f"cannot add a child of kind {kind!r}")
        parent_node = self.nodes[parent]
        if parent_node.is_terminal:
            raise TreeError(f"node {parent} is a terminal answer and cannot have children")
        value = _check_value(value)
        node_id = len(self.nodes)
        node = SearchNode(
            id=node_id,
            parent_id=parent,
            kind=kind,
            original_value=value,
            current_value=value,
            action_text=action_text,
            observation_text="" if kind == TERMINAL else observation_text,
            answer_text=answer_text if kind == TERMINAL else "",
            step_index=node_id if step_index is None else step_index,
            depth=parent_node.depth + 1,
            instruction=instruction,
            meta=dict(meta or {}),
        )
        self.nodes[node_id] = node
        parent_node.child_ids.append(node_id)
        if kind == TERMINAL:
            self.answer_ids.add(node_id)
        return node_id

    def path(self, node_id: int) -> list[SearchNode]:
        """Nodes from the root down to ``node_id`` inclusive."""
        out = []
        cur: int | None = node_id
        while cur is not None:
            node = self.nodes[cur]
            out.append(node)
            cur = node.parent_id
        out.reverse()
        return out

    def leaves(self) -> list[SearchNode]:
        return [n for n in self.nodes.values() if not n.child_ids]

    @property
    def max_depth(self) -> int:
        return max(n.depth for n in self.nodes.values())

    def backpropagate(self) -> None:
        """Recompute every current value from original values and topology.

        Each node becomes the mean of its own original value and its
        children's current values. Children always carry larger ids than
        their parent, so a descending-id sweep visits children first.
        """
        for node_id in sorted(self.nodes, reverse=True):
            node = self.nodes[node_id]
            if not node.child_ids:
                node.current_value = node.original_value
                continue
            total = node.original_value
            for cid in node.child_ids:
                total += self.nodes[cid].current_value
            node.current_value = total / (1 + len(node.child_ids))

    def best_answer(self) -> tuple[int, str] | None:
        if not self.answer_ids:
            return None
        best = min(self.answer_ids, key=lambda i: (-rank_key(self.nodes[i].current_value), i))
        return best, self.nodes[best].answer_text

    def best_incomplete_leaf(self) -> int:
        candidates = [n for n in self.leaves() if not n.is_terminal]
        if not candidates:
            raise TreeError("every leaf is a terminal answer")
        return min(candidates, key=lambda n: (-rank_key(n.current_value), n.id)).id

    def stats(self) -> dict[str, int]:
        return {
            "node_count": len(self.nodes),
            "max_depth": self.max_depth,
            "answers_found": len(self.answer_ids),
        }

    def dump_lines(self, width: int = 120) -> list[str]:
        """One JSON record per node, with action/observation truncated."""
        lines = []
        for node in self.nodes.values():
            rec = {
                "id": node.id,
                "parent": node.parent_id,
                "kind": node.kind,
                "original_value": round(node.original_value, 12),
                "current_value": round(node.current_value, 12),
                "action": node.action_text[:width],
                "observation": node.observation_text[:width],
            }
            if node.is_terminal:
                rec["answer"] = node.answer_text
            lines.append(json.dumps(rec, ensure_ascii=False))
        return lines

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.dump_lines():
                fh.write(line + "\n")


def create_root(question: str, initial_value: float = VALUE_MIN) -> ValueTree:
    return ValueTree(question, initial_value)
