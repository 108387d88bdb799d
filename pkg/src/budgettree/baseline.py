"""Parallel-sampling baseline: independent linear agent loops plus majority vote.

Trajectories run one after another against a single shared ledger, so the
cumulative cost of all trajectories respects the budget. A trajectory cut
off by exhaustion is force-answered and still votes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backends.chat import BackendError, ChatBackend
from .backends.retrieval import Retriever
from .budget import ActionCost, BudgetLedger
from .config import RunConfig
from .costs import PRICING, PricingModel
from .engine import make_policy
from .metrics import exact_match, f1_score, normalize_answer
from .policy import ANSWER, TOOL_CALL, Policy, forced_answer_text
from .reporting import RunReport
from .tree import INTERMEDIATE, ValueTree


@dataclass
class Trajectory:
    steps: list[tuple[str, str]] = field(default_factory=list)
    answer_text: str | None = None
    tool_cost_total: int = 0
    token_cost_total: int = 0
    completed: bool = False
    truncated: bool = False


@dataclass
class BaselineResult:
    report: RunReport
    trajectories: list[Trajectory]
    ledger: BudgetLedger
    forced_from_question: bool = False


def majority_vote(answers: list[str]) -> str:
    """Most frequent answer after normalization; ties go to the earliest."""
    if not answers:
        raise ValueError("no answers to vote over")
    counts: dict[str, int] = {}
    first: dict[str, str] = {}
    for a in answers:
        key = normalize_answer(a)
        counts[key] = counts.get(key, 0) + 1
        first.setdefault(key, a)
    best = max(counts.values())
    for key in counts:  # insertion order is first-occurrence order
        if counts[key] == best:
            return first[key]
    raise AssertionError("unreachable")


def _charge(ledger: BudgetLedger, traj: Trajectory, tool: int, tokens: int) -> None:
    ledger.charge(ActionCost(tool, tokens))
    traj.tool_cost_total += tool
    traj.token_cost_total += tokens


def _run_trajectory(question: str, policy: Policy, ledger: BudgetLedger, max_steps: int) -> Trajectory:
    traj = Trajectory()
    chain = ValueTree(question)
    node = chain.root_id
    while True:
        if not ledger.running or len(traj.steps) >= max_steps:
            action = policy.propose(chain, node, "backstop_answer", "")
            _charge(ledger, traj, 0, action.token_usage)
            traj.answer_text = forced_answer_text(action)
            traj.truncated = True
            return traj
        action = policy.propose(chain, node, None, "")
        if action.kind == ANSWER:
            _charge(ledger, traj, 0, action.token_usage)
            traj.answer_text = action.answer_text
            traj.completed = True
            return traj
        observation, ok = "", False
        if action.kind == TOOL_CALL:
            observation, ok = policy.execute(action)
        _charge(ledger, traj, 1 if ok else 0, action.token_usage)
        traj.steps.append((action.describe(), observation))
        node = chain.add_child(node, INTERMEDIATE, action.describe(), observation, chain.root.original_value)


def sample_trajectories(question: str, policy: Policy, ledger: BudgetLedger, trajectories: list[Trajectory]) -> bool:
    """Fill ``trajectories`` until the ledger cannot start another one.

    Returns True when no trajectory produced an answer and one had to be
    forced from the bare question.
    """
    max_steps = max(1, 2 * ledger.initial_tool)
    # A new trajectory needs room for at least one tool call and one token.
    while ledger.remaining_tool >= 1 and ledger.remaining_token >= 1:
        trajectories.append(_run_trajectory(question, policy, ledger, max_steps))
    forced = False
    if not any(t.answer_text for t in trajectories):
        traj = Trajectory()
        action = policy.propose(ValueTree(question), 0, "backstop_answer", "")
        _charge(ledger, traj, 0, action.token_usage)
        traj.answer_text = forced_answer_text(action)
        traj.truncated = True
        trajectories.append(traj)
        forced = True
    return forced


def run_baseline_with(
    question: str,
    config: RunConfig,
    policy: Policy,
    *,
    question_id: str = "q0",
    golds: list[str] | None = None,
    pricing: PricingModel | None = None,
    dataset: str = "",
) -> BaselineResult:
    failed, error = False, ""
    trajectories: list[Trajectory] = []
    ledger = BudgetLedger(*config.limits(), alpha_max=config.alpha_max)
    forced = False
    try:
        forced = sample_trajectories(question, policy, ledger, trajectories)
    except BackendError as exc:
        failed, error = True, str(exc)
    answers = [t.answer_text for t in trajectories if t.answer_text]
    answer = majority_vote(answers) if answers else ""
    pricing = pricing or PRICING.get(config.family, PRICING["reasoning"])
    stats = {
        "node_count": sum(len(t.steps) + 1 for t in trajectories),
        "max_depth": max((len(t.steps) for t in trajectories), default=0),
        "answers_found": len(answers),
        "backstop_fired": any(t.truncated for t in trajectories),
        "trajectories": len(trajectories),
        "completed_trajectories": sum(t.completed for t in trajectories),
    }
    report = RunReport(
        question_id=question_id,
        method="baseline",
        answer=answer,
        em=exact_match(answer, golds) if golds else None,
        f1=f1_score(answer, golds) if golds else None,
        tools_used=ledger.tools_used,
        tokens_used=ledger.tokens_used,
        estimated_cost_usd=round(pricing.cost(ledger.tools_used, ledger.tokens_used), 10),
        tree_stats=stats,
        seed=config.seed,
        dataset=dataset,
        tier=config.tier_label,
        failed=failed,
        error=error,
    )
    return BaselineResult(report, trajectories, ledger, forced)


def run_baseline(question: str, config: RunConfig, chat: ChatBackend, tool: Retriever | None, **kwargs) -> BaselineResult:
    return run_baseline_with(question, config, make_policy(chat, tool, config), **kwargs)
