from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from budgettree.backends.chat import BackendError
from budgettree.backends.scripted import ScriptedWorld
from budgettree.config import RunConfig
from budgettree.engine import make_policy, plan, run_question, search
from budgettree.policy import ANSWER, REASONING, TOOL_CALL, AgentAction, parse_action
from budgettree.tree import TERMINAL
from replay import WORLDS, expected, run_world, trace_mismatches


@pytest.mark.parametrize("name", WORLDS)
def test_replay_matches_frozen_trace(name):
    result = run_world(name)
    frozen = expected(name)
    assert trace_mismatches(result.trace, frozen["trace"]) == []
    assert result.tree.best_answer()[0] == frozen["best_answer_node"]
    assert result.report.tools_used == frozen["tools_used"]
    assert len(result.tree) == frozen["node_count"]
    assert [round(n.current_value, 9) for n in result.tree] == [round(v, 9) for v in frozen["final_values"]]


@pytest.mark.parametrize("name", WORLDS)
def test_replay_is_byte_identical(name):
    a, b = run_world(name), run_world(name)
    assert a.report.to_json() == b.report.to_json()
    assert a.tree.dump_lines() == b.tree.dump_lines()
    assert (a.ledger.remaining_tool, a.ledger.remaining_token) == (b.ledger.remaining_tool, b.ledger.remaining_token)


def test_world_outcomes():
    fast = run_world("fast_answer").report
    assert fast.answer == "Paris" and fast.em == 1 and not fast.tree_stats["backstop_fired"]
    widen = run_world("all_widen")
    forced = [n for n in widen.tree if n.kind == TERMINAL]
    assert len(forced) == 1 and widen.report.tree_stats["backstop_fired"]
    assert widen.report.answer == "unknown"
    mixed = run_world("mixed")
    assert mixed.report.answer == "Gustave Eiffel"
    assert mixed.plan.startswith("- Hop 1")
    assert {r.get("instruction") for r in mixed.trace} >= {"deepen", "widen", "answer"}


class ScriptedPolicy:
    """Minimal policy driven by a list of actions; critic returns fixed deltas."""

    def __init__(self, actions, delta=1, critic_tokens=5, plan_tokens=0, fail_plan=False, fail_at=None):
        self.actions = list(actions)
        self.delta, self.critic_tokens = delta, critic_tokens
        self.plan_tokens, self.fail_plan, self.fail_at = plan_tokens, fail_plan, fail_at
        self.calls = 0
        self.critiques = 0
        self.instructions = []

    def plan(self, question, tool_limit, token_limit):
        if self.fail_plan:
            raise BackendError("planner down")
        return f"plan for {tool_limit} tools", self.plan_tokens

    def propose(self, tree, node, instruction, plan):
        self.calls += 1
        self.instructions.append(instruction)
        if self.fail_at is not None and self.calls >= self.fail_at:
            raise BackendError("chat endpoint gone")
        if instruction == "backstop_answer":
            return AgentAction(ANSWER, "<answer>forced</answer>", 7, answer_text="forced")
        return self.actions.pop(0) if len(self.actions) > 1 else self.actions[0]

    def execute(self, action):
        return ("nothing found", False) if action.tool_args.get("query") == "" else ("evidence", True)

    def critique(self, tree, node, action, observation):
        self.critiques += 1
        return self.delta, self.critic_tokens


def tool(q="q", tokens=20):
    return AgentAction(TOOL_CALL, "", tokens, tool_name="search", tool_args={"query": q})


def config(tools, tokens, **kw):
    kw.setdefault("planner_enabled", False)
    return RunConfig(tool_budget=tools, token_budget=tokens, **kw)


def test_zero_budget_forces_answer_from_question():
    policy = ScriptedPolicy([tool()])
    result = search("q?", config(0, 0), policy)
    assert result.report.answer == "forced"
    assert policy.instructions == ["backstop_answer"]
    assert result.tree.best_answer()[0] == 1 and result.tree[1].parent_id == 0
    assert result.report.tools_used == 0


def test_planner_charges_and_disabled_path():
    policy = ScriptedPolicy([tool()], plan_tokens=120)
    result = search("q?", config(2, 1000, planner_enabled=True), policy)
    assert result.trace[0] == {"event": "plan", "tokens": 120, "tool_left": 2, "token_left": 880}
    assert result.plan == "plan for 2 tools"
    assert plan("q?", RunConfig(planner_enabled=False), chat=None) == ("", 0)


def test_planner_budget_hint_mentions_tier_limits():
    world = ScriptedWorld.from_dict({"rules": [
        {"purpose": "planner", "contains": ["at most 5 tool calls"], "response": {"content": "- Hop 1: x", "tokens": 9}}
    ]})
    assert plan("q?", RunConfig(tier="low"), world) == ("- Hop 1: x", 9)


def test_planner_failure_is_not_fatal():
    result = search("q?", config(2, 500, planner_enabled=True), ScriptedPolicy([tool()], fail_plan=True))
    assert result.trace[0] == {"event": "plan_failed"}
    assert not result.report.failed and result.report.answer


def test_backend_failure_reports_partial_spend():
    result = search("q?", config(5, 1000), ScriptedPolicy([tool()], fail_at=3))
    rep = result.report
    assert rep.failed and "gone" in rep.error
    assert rep.tools_used == 2 and rep.tokens_used == 2 * 25


def test_failed_tool_call_retried_once_then_zero_gain():
    policy = ScriptedPolicy([tool(""), tool(""), tool("ok")], delta=2)
    result = search("q?", config(3, 1000), policy)
    first = result.trace[0]
    assert first["tool_ok"] is False and first["tool_failures"] == 2
    assert first["delta"] == 0 and first["routed"] == "widen" and first["tokens"] == 40
    assert first["tool_left"] == 3 and "critic_tokens" not in first
    assert policy.critiques == sum(1 for r in result.trace if r.get("tool_ok"))


def test_reasoning_only_step_is_critiqued():
    policy = ScriptedPolicy([AgentAction(REASONING, "let me think", 10)], delta=1)
    result = search("q?", config(2, 60), policy)
    child = result.tree[1]
    assert child.observation_text == "" and child.action_text == "let me think"
    assert child.original_value == pytest.approx(0.2)
    assert result.trace[0]["critic_tokens"] == 5


def test_answer_under_widen_is_accepted():
    policy = ScriptedPolicy([tool(), AgentAction(ANSWER, "<answer>A</answer>", 5, answer_text="A")], delta=-1)
    result = search("q?", config(3, 300, seed=0), policy)
    step2 = result.trace[1]
    assert step2["instruction"] in ("widen", "deepen") and step2["action"] == "answer"
    assert result.report.answer == "A"


def test_critic_tokens_switch():
    on = search("q?", config(2, 1000), ScriptedPolicy([tool()]))
    off = search("q?", config(2, 1000, charge_critic_tokens=False), ScriptedPolicy([tool()]))
    assert on.report.tokens_used - off.report.tokens_used == 5 * 2


def test_ablation_switches():
    no_value = ScriptedPolicy([tool()])
    r = search("q?", config(4, 1000, use_value=False), no_value)
    assert no_value.critiques == 0
    steps = [e for e in r.trace if "step" in e]
    assert all(len(set(e["probs"])) == 1 for e in steps)
    r = search("q?", config(4, 1000, use_budget=False), ScriptedPolicy([tool()]))
    assert all(e["alpha"] == 1.0 for e in r.trace if "step" in e)


def test_run_question_with_scripted_chat(corpus):
    world = ScriptedWorld.from_dict({"rules": [
        {"purpose": "generator", "contains": ["Observation:"], "response": {"content": "<answer>Paris</answer>", "tokens": 5}, "repeat": True},
        {"purpose": "generator", "response": {"content": "", "tokens": 5, "tool_call": {"name": "search", "args": {"query": "capital of France"}}}, "repeat": True},
        {"purpose": "critic", "response": {"content": '{"delta": 3}', "tokens": 5}, "repeat": True},
    ]})
    result = run_question("What is the capital of France?", config(2, 100), world, corpus, golds=["Paris"])
    assert result.report.em == 1
    assert "Doc 1 (Title: Paris)" in result.tree[1].observation_text


class RandomPolicy:
    def __init__(self, seed):
        self.rng = random.Random(seed)

    def plan(self, question, tool_limit, token_limit):
        return "", self.rng.randint(0, 50)

    def propose(self, tree, node, instruction, plan):
        k = self.rng.random()
        tokens = self.rng.randint(0, 120)
        if instruction == "backstop_answer" or k < 0.2:
            return AgentAction(ANSWER, "", tokens, answer_text="ans")
        if k < 0.3:
            return AgentAction(REASONING, "hmm", tokens)
        return tool("" if k < 0.4 else "q", tokens)

    def execute(self, action):
        ok = bool(action.tool_args.get("query"))
        return ("obs" if ok else "error"), ok

    def critique(self, tree, node, action, observation):
        return self.rng.randint(-4, 4), self.rng.randint(0, 30)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 12), st.integers(0, 1500), st.integers(0, 10**6), st.booleans())
def test_liveness(b_tool, b_token, seed, planner):
    cfg = RunConfig(tool_budget=b_tool, token_budget=b_token, seed=seed, planner_enabled=planner)
    result = search("q?", cfg, RandomPolicy(seed))
    rep = result.report
    assert rep.answer
    assert rep.tools_used <= b_tool
    # One call may overshoot: generator plus its critique, or a backstop answer.
    assert rep.tokens_used <= b_token + 120 + 30 + 120
    assert sum(1 for e in result.trace if e.get("event") == "backstop") <= 1
    for e in result.trace:
        if "step" in e:
            assert e.get("tool_failures", 0) <= 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 800), st.integers(0, 1000))
def test_seeded_determinism(b_tool, b_token, seed):
    cfg = RunConfig(tool_budget=b_tool, token_budget=b_token, seed=seed, planner_enabled=False)
    a = search("q?", cfg, RandomPolicy(seed))
    b = search("q?", cfg, RandomPolicy(seed))
    assert a.report.to_json() == b.report.to_json() and a.trace == b.trace


@pytest.mark.parametrize(
    "text, native, kind, detail",
    [
        ("So it is <answer>Paris</answer>", None, ANSWER, "Paris"),
        ("", ("search", {"query": "capital of France"}), TOOL_CALL, "capital of France"),
        ("I wonder about this.", None, REASONING, ""),
        ('<tool_call>{"name": "search", "arguments": {"query": "x y"}}</tool_call>', None, TOOL_CALL, "x y"),
        ('```json\n{"name": "search", "arguments": "{\\"query\\": \\"z\\"}"}\n```', None, TOOL_CALL, "z"),
        ("<answer>A</answer> and <answer>B</answer>", None, ANSWER, "A"),
        ("<answer>  </answer> nothing", None, REASONING, ""),
    ],
)
def test_parse_action(text, native, kind, detail):
    action = parse_action(text, native, 11)
    assert action.kind == kind and action.token_usage == 11
    if kind == ANSWER:
        assert action.answer_text == detail
    if kind == TOOL_CALL:
        assert action.tool_args["query"] == detail


def test_parse_action_prefers_answer():
    action = parse_action("<answer>Paris</answer>", ("search", {"query": "x"}))
    assert action.kind == ANSWER and action.anomaly
    with pytest.raises(ValueError):
        AgentAction(ANSWER, "x")
    with pytest.raises(ValueError):
        AgentAction(TOOL_CALL, "x", answer_text="y")


def test_critic_temperature_override():
    world = ScriptedWorld.from_dict({"rules": []})
    assert make_policy(world, None, RunConfig()).critic_sampling.temperature == 1.0
    policy = make_policy(world, None, RunConfig(family="instruct", critic_temperature=0.1))
    assert policy.critic_sampling.temperature == 0.1 and policy.critic_sampling.top_k == 20
    assert policy.sampling.temperature == 0.7
