from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from budgettree.tree import INTERMEDIATE, ROOT, TERMINAL, TreeError, ValueTree, create_root
from oracles.brute import random_tree, recursive_values


def build(parents, originals, terminal=()):
    tree = ValueTree("q", originals[0])
    for i in range(1, len(parents)):
        kind = TERMINAL if i in terminal else INTERMEDIATE
        tree.add_child(parents[i], kind, f"a{i}", f"o{i}", originals[i], answer_text="x" if kind == TERMINAL else "")
    return tree


def test_create_root():
    tree = create_root("Who directed X?", 0.1)
    assert len(tree) == 1
    assert tree.root.kind == ROOT and tree.root.parent_id is None
    assert tree.root.original_value == tree.root.current_value == 0.1
    assert tree.answer_ids == set()
    assert create_root("q", 1.0).root.current_value == 1.0


@pytest.mark.parametrize("bad", [0.05, 1.01, -1.0])
def test_create_root_rejects_out_of_range(bad):
    with pytest.raises(TreeError):
        create_root("q", bad)


def test_add_child_structure():
    tree = create_root("q", 0.1)
    a = tree.add_child(0, INTERMEDIATE, "search", "obs", 0.3)
    assert len(tree) == 2 and tree.root.child_ids == [a]
    assert tree[a].parent_id == 0 and tree[a].depth == 1
    t = tree.add_child(a, TERMINAL, "<answer>x</answer>", "ignored", 0.7, answer_text="x")
    assert tree.answer_ids == {t}
    assert tree[t].observation_text == ""
    with pytest.raises(TreeError):
        tree.add_child(t, INTERMEDIATE, "z", "", 0.5)
    with pytest.raises(TreeError):
        tree.add_child(99, INTERMEDIATE, "z", "", 0.5)
    with pytest.raises(TreeError):
        tree.add_child(a, INTERMEDIATE, "z", "", 1.5)
    with pytest.raises(TreeError):
        tree.add_child(a, ROOT, "z", "", 0.5)


def test_backpropagate_examples():
    tree = create_root("q", 0.5)
    tree.backpropagate()
    assert tree.root.current_value == 0.5

    tree = create_root("q", 0.5)
    tree.add_child(0, INTERMEDIATE, "a", "", 0.7)
    tree.add_child(0, INTERMEDIATE, "b", "", 0.9)
    tree.backpropagate()
    assert tree.root.current_value == pytest.approx(0.7, abs=1e-12)

    tree = create_root("q", 0.1)
    a = tree.add_child(0, INTERMEDIATE, "a", "", 0.4)
    tree.add_child(a, INTERMEDIATE, "b", "", 0.9)
    tree.backpropagate()
    assert tree[a].current_value == pytest.approx(0.65, abs=1e-12)
    assert tree.root.current_value == pytest.approx(0.375, abs=1e-12)
    assert tree[a].original_value == 0.4


def test_best_answer_and_ties():
    tree = create_root("q", 0.1)
    assert tree.best_answer() is None
    ids = {}
    for name, v in [("x3", 0.8), ("x5", 0.8), ("x7", 0.6)]:
        ids[name] = tree.add_child(0, TERMINAL, name, "", v, answer_text=name)
    assert tree.best_answer() == (ids["x3"], "x3")


def test_best_answer_ignores_summation_noise():
    tree = create_root("q", 0.8)
    a = tree.add_child(0, TERMINAL, "a", "", 0.8, answer_text="a")
    b = tree.add_child(0, TERMINAL, "b", "", 0.8 + 2e-16, answer_text="b")
    assert tree.best_answer()[0] == a < b


def test_best_incomplete_leaf():
    tree = create_root("q", 0.1)
    assert tree.best_incomplete_leaf() == 0
    a = tree.add_child(0, INTERMEDIATE, "a", "", 0.4)
    b = tree.add_child(0, INTERMEDIATE, "b", "", 0.6)
    tree.add_child(0, TERMINAL, "t", "", 0.9, answer_text="t")
    assert tree.best_incomplete_leaf() == b
    c = tree.add_child(a, INTERMEDIATE, "c", "", 0.6)
    assert tree.best_incomplete_leaf() == b < c

    only_answers = create_root("q", 0.1)
    only_answers.add_child(0, TERMINAL, "t", "", 0.5, answer_text="t")
    with pytest.raises(TreeError):
        only_answers.best_incomplete_leaf()


def test_path_leaves_and_stats():
    tree = create_root("q", 0.1)
    a = tree.add_child(0, INTERMEDIATE, "a", "", 0.2)
    b = tree.add_child(a, INTERMEDIATE, "b", "", 0.3)
    assert [n.id for n in tree.path(b)] == [0, a, b]
    assert [n.id for n in tree.leaves()] == [b]
    assert tree.stats() == {"node_count": 3, "max_depth": 2, "answers_found": 0}


def test_dump_records(tmp_path):
    tree = create_root("q", 0.1)
    a = tree.add_child(0, INTERMEDIATE, "x" * 500, "obs", 0.3)
    tree.add_child(a, TERMINAL, "<answer>y</answer>", "", 0.3, answer_text="y")
    path = tmp_path / "tree.jsonl"
    tree.dump(path)
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["id"] for r in recs] == [0, 1, 2]
    assert recs[0]["parent"] is None and recs[1]["parent"] == 0
    assert {"id", "parent", "kind", "original_value", "current_value", "action", "observation"} <= set(recs[1])
    assert len(recs[1]["action"]) == 120
    assert recs[2]["answer"] == "y"


@st.composite
def trees(draw):
    n = draw(st.integers(1, 40))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    originals = [draw(st.floats(0.1, 1.0)) for _ in range(n)]
    return parents, originals


@settings(max_examples=200, deadline=None)
@given(trees())
def test_backprop_properties(data):
    parents, originals = data
    tree = build(parents, originals)
    tree.backpropagate()
    once = [n.current_value for n in tree]
    tree.backpropagate()
    assert [n.current_value for n in tree] == pytest.approx(once, abs=1e-12)
    for n in tree:
        assert 0.1 - 1e-12 <= n.current_value <= 1.0 + 1e-12
        if not n.child_ids:
            assert n.current_value == n.original_value
        for c in n.child_ids:
            assert tree[c].parent_id == n.id
    assert once == pytest.approx(recursive_values(parents, originals), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(trees(), st.data())
def test_best_answer_is_maximal(data, extra):
    parents, originals = data
    terminal = {i for i in range(1, len(parents)) if i not in parents and extra.draw(st.booleans())}
    tree = build(parents, originals, terminal)
    tree.backpropagate()
    assert tree.answer_ids == {n.id for n in tree if n.kind == TERMINAL}
    best = tree.best_answer()
    if not terminal:
        assert best is None
        return
    for i in tree.answer_ids:
        assert tree[best[0]].current_value >= tree[i].current_value - 1e-9


def test_oracle_equivalence_sample():
    rng = random.Random(1)
    for _ in range(50):
        parents, originals = random_tree(rng)
        tree = build(parents, originals)
        tree.backpropagate()
        assert [n.current_value for n in tree] == pytest.approx(recursive_values(parents, originals), abs=1e-12)
