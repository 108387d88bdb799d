"""Budget-aware value-tree search for one question under one budget.

Each iteration of :func:`search`:

1. computes the remaining-budget ratio and annealing exponent,
2. samples a pooled node with probability proportional to ``value**alpha``,
3. asks the policy for one action under that node's routed instruction,
4. charges the ledger, creates the child and critiques it (terminal
   answers inherit the parent's value instead),
5. backpropagates once any answer exists, and
6. forces a single answer from the best incomplete leaf when the budget
   nears exhaustion with no answer yet.

The loop runs until either budget is spent; it does not stop at the first
answer.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .backends.chat import BackendError, ChatBackend, Sampling
from .backends.retrieval import Retriever
from .budget import ActionCost, BudgetLedger
from .config import RunConfig
from .costs import PRICING, PricingModel
from .critic import apply_delta, route_kind
from .metrics import exact_match, f1_score
from .policy import ANSWER, TOOL_CALL, AgentAction, LLMPolicy, Policy, forced_answer_text
from .reporting import RunReport
from .selector import CandidatePool, build_distribution, draw_index, uniform_distribution
from .tree import INTERMEDIATE, TERMINAL, VALUE_MIN, ValueTree

log = logging.getLogger(__name__)

ROOT_VALUE = VALUE_MIN
MAX_TOOL_FAILURES = 2


def _r(x: float) -> float:
    return round(float(x), 12)


@dataclass
class RunResult:
    report: RunReport
    tree: ValueTree
    ledger: BudgetLedger
    trace: list[dict] = field(default_factory=list)
    plan: str = ""


class _Search:
    def __init__(self, question: str, config: RunConfig, policy: Policy, stop_on_threshold: bool):
        self.config = config
        self.policy = policy
        self.stop_on_threshold = stop_on_threshold
        tools, tokens = config.limits()
        self.ledger = BudgetLedger(tools, tokens, alpha_max=config.alpha_max)
        self.tree = ValueTree(question, ROOT_VALUE)
        self.pool = CandidatePool(config.n_max, [self.tree.root_id])
        self.rng = np.random.default_rng(config.seed)
        self.trace: list[dict] = []
        self.plan = ""
        self.backstop_fired = False
        self.threshold_step: int | None = None
        self.max_depth = max(1, 2 * tools)
        self.step = 0

    def _ledger_state(self) -> dict:
        return {"tool_left": self.ledger.remaining_tool, "token_left": self.ledger.remaining_token}

    def run_planner(self) -> None:
        tools, tokens = self.config.limits()
        try:
            plan, used = self.policy.plan(self.tree.question, tools, tokens)
        except BackendError as exc:
            log.warning("planner failed, continuing without a plan: %s", exc)
            self.trace.append({"event": "plan_failed"})
            return
        self.plan = plan
        self.ledger.charge(ActionCost(0, used))
        self.trace.append({"event": "plan", "tokens": used, **self._ledger_state()})

    def select(self) -> dict:
        cfg = self.config
        alpha = self.ledger.annealing_exponent() if cfg.use_budget else 1.0
        if cfg.use_value:
            dist = build_distribution(self.pool, self.tree, alpha)
        else:
            dist = uniform_distribution(self.pool)
        u = float(self.rng.random())
        node = dist.node_ids[draw_index(dist.probabilities, u)]
        return {
            "alpha": _r(alpha),
            "pool": list(dist.node_ids),
            "probs": [_r(p) for p in dist.probabilities],
            "u": _r(u),
            "selected": node,
        }

    def expand(self) -> dict:
        cfg = self.config
        tree = self.tree
        self.step += 1
        rec = {"step": self.step, **self.select()}
        n = rec["selected"]
        parent = tree[n]
        instruction = parent.instruction
        failures = 0
        step_tokens = 0
        while True:
            action = self.policy.propose(tree, n, instruction, self.plan)
            observation, tool_ok = "", False
            if action.kind == TOOL_CALL:
                observation, tool_ok = self.policy.execute(action)
            self.ledger.charge(ActionCost(1 if tool_ok else 0, action.token_usage))
            step_tokens += action.token_usage
            if action.kind != TOOL_CALL or tool_ok:
                break
            failures += 1
            # A second consecutive failure makes the step a zero-gain child.
            if failures >= MAX_TOOL_FAILURES or not self.ledger.running:
                break
        rec.update(instruction=instruction, action=action.kind, tokens=step_tokens)
        if action.kind == TOOL_CALL:
            rec["tool_ok"] = tool_ok
        if failures:
            rec["tool_failures"] = failures

        if action.kind == ANSWER:
            if instruction == "widen":
                log.info("answer emitted under a widen instruction; accepted as terminal")
            child = tree.add_child(
                n, TERMINAL, action.describe(), "", parent.current_value,
                answer_text=action.answer_text, instruction="answer", meta=action.meta,
            )
            rec.update(child=child, value=_r(parent.current_value))
        else:
            if action.kind == TOOL_CALL and not tool_ok:
                delta = 0
            elif cfg.use_value:
                delta, critic_tokens = self.policy.critique(tree, n, action, observation)
                if cfg.charge_critic_tokens:
                    self.ledger.charge(ActionCost(0, critic_tokens))
                rec["critic_tokens"] = critic_tokens
            else:
                delta = 0
            value = apply_delta(parent.current_value, delta)
            kind = route_kind(parent.current_value, value, cfg.tau) if cfg.use_value else "deepen"
            child = tree.add_child(
                n, INTERMEDIATE, action.describe(), observation, value, instruction=kind, meta=action.meta
            )
            if tree[child].depth < self.max_depth:
                self.pool.update(child, tree)
            if value >= cfg.tau and self.threshold_step is None:
                self.threshold_step = self.step
            rec.update(child=child, delta=delta, value=_r(value), routed=kind)

        if tree.answer_ids:
            tree.backpropagate()
        rec["backprop"] = bool(tree.answer_ids)
        rec.update(self._ledger_state())
        self.trace.append(rec)
        return rec

    def backstop(self) -> None:
        tree = self.tree
        leaf = tree.best_incomplete_leaf()
        action: AgentAction = self.policy.propose(tree, leaf, "backstop_answer", self.plan)
        self.ledger.charge(ActionCost(0, action.token_usage))
        answer = forced_answer_text(action)
        value = tree[leaf].current_value
        child = tree.add_child(
            leaf, TERMINAL, action.describe() if action.kind == ANSWER else f"<answer>{answer}</answer>", "",
            value, answer_text=answer, instruction="backstop_answer",
        )
        tree.backpropagate()
        self.backstop_fired = True
        self.trace.append(
            {"event": "backstop", "leaf": leaf, "child": child, "value": _r(value), "tokens": action.token_usage,
             **self._ledger_state()}
        )

    def run(self) -> None:
        cfg = self.config
        if cfg.planner_enabled and self.ledger.running:
            self.run_planner()
        step_cap = self.ledger.initial_token + self.ledger.initial_tool + 1
        while self.ledger.running and self.step < step_cap:
            self.expand()
            if self.stop_on_threshold and self.threshold_step is not None:
                return
            if not self.backstop_fired and self.ledger.backstop_due(bool(self.tree.answer_ids), cfg.eta):
                self.backstop()
        if not self.tree.answer_ids:
            self.backstop()


def search(
    question: str,
    config: RunConfig,
    policy: Policy,
    *,
    question_id: str = "q0",
    golds: list[str] | None = None,
    pricing: PricingModel | None = None,
    dataset: str = "",
    stop_on_threshold: bool = False,
) -> RunResult:
    """Run the tree search with an arbitrary policy.

    ``stop_on_threshold`` ends the run as soon as any node reaches ``tau``;
    it exists for the convergence simulations, where that event is the only
    quantity of interest.
    """
    s = _Search(question, config, policy, stop_on_threshold)
    failed, error = False, ""
    try:
        s.run()
    except BackendError as exc:
        log.error("run %s aborted: %s", question_id, exc)
        failed, error = True, str(exc)
    best = s.tree.best_answer()
    answer = best[1] if best else ""
    pricing = pricing or PRICING.get(config.family, PRICING["reasoning"])
    stats = {
        **s.tree.stats(),
        "backstop_fired": s.backstop_fired,
        "reached_threshold": s.threshold_step is not None,
        "threshold_step": s.threshold_step,
        "expansions": s.step,
    }
    report = RunReport(
        question_id=question_id,
        method="bavt",
        answer=answer,
        em=exact_match(answer, golds) if golds else None,
        f1=f1_score(answer, golds) if golds else None,
        tools_used=s.ledger.tools_used,
        tokens_used=s.ledger.tokens_used,
        estimated_cost_usd=round(pricing.cost(s.ledger.tools_used, s.ledger.tokens_used), 10),
        tree_stats=stats,
        seed=config.seed,
        dataset=dataset,
        tier=config.tier_label,
        failed=failed,
        error=error,
    )
    return RunResult(report, s.tree, s.ledger, s.trace, s.plan)


def make_policy(chat: ChatBackend, tool: Retriever | None, config: RunConfig) -> LLMPolicy:
    critic_sampling = None
    if config.critic_temperature is not None:
        critic_sampling = dataclasses.replace(Sampling.for_family(config.family), temperature=config.critic_temperature)
    return LLMPolicy(
        chat,
        tool,
        family=config.family,
        max_output_tokens=config.max_output_tokens,
        history_window=config.history_window,
        retrieval_k=config.retrieval_k,
        critic_sampling=critic_sampling,
    )


def run_question(
    question: str,
    config: RunConfig,
    chat: ChatBackend,
    tool: Retriever | None,
    **kwargs,
) -> RunResult:
    return search(question, config, make_policy(chat, tool, config), **kwargs)


def plan(question: str, config: RunConfig, chat: ChatBackend) -> tuple[str, int]:
    """The root planning call on its own; returns ``("", 0)`` when disabled."""
    if not config.planner_enabled:
        return "", 0
    tools, tokens = config.limits()
    return make_policy(chat, None, config).plan(question, tools, tokens)
