"""Oracle-world sweeps comparing empirical success rates to the analytic bound."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from scipy import stats

from .backends.oracle import OracleWorld, OracleWorldConfig, expansion_bound, oracle_steps_required
from .config import RunConfig
from .engine import ROOT_VALUE, search
from .selector import probability_floor


@dataclass(frozen=True)
class AnalyticBound:
    k: int
    p_min: float
    m: float
    eps: float

    @property
    def budget(self) -> int:
        """Smallest integer number of expansions meeting the bound."""
        return math.ceil(self.m)


def analytic_bound(
    tau: float = 0.8,
    start_value: float = ROOT_VALUE,
    delta: float = 0.1,
    n_max: int = 16,
    alpha_max: float = 50.0,
    eps: float = 0.05,
    v_min: float = 0.1,
    v_max: float = 1.0,
) -> AnalyticBound:
    k = oracle_steps_required(tau, start_value, delta)
    p_min = probability_floor(n_max, alpha_max, v_min, v_max)
    return AnalyticBound(k, p_min, expansion_bound(k, p_min, eps), eps)


@dataclass
class SweepSpec:
    budgets: list
    trials: int = 1000
    eps: float = 0.05
    tau: float = 0.8
    eta: float = 0.2
    n_max: int = 16
    alpha_max: float = 50.0
    base_seed: int = 0
    world: OracleWorldConfig = field(default_factory=OracleWorldConfig)

    def __post_init__(self):
        if not self.budgets:
            raise ValueError("sweep needs at least one budget point")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        for b in self.budgets:
            if b != "M" and (not isinstance(b, int) or b < 0):
                raise ValueError(f"invalid budget point {b!r}; use a nonnegative integer or 'M'")

    def bound(self) -> AnalyticBound:
        return analytic_bound(
            tau=self.tau,
            delta=self.world.delta_per_oracle_step / 10,
            n_max=self.n_max,
            alpha_max=self.alpha_max,
            eps=self.eps,
        )

    def resolved_budgets(self) -> list[int]:
        m = self.bound().budget
        return [m if b == "M" else b for b in self.budgets]


@dataclass
class SweepPoint:
    budget: int
    trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float
    mean_expansions: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["budget"] = str(self.budget) if self.budget > 2**53 else self.budget
        return d


def run_trial(budget: int, seed: int, spec: SweepSpec) -> tuple[bool, int]:
    config = RunConfig(
        tool_budget=budget,
        token_budget=budget * spec.world.step_tokens,
        tau=spec.tau,
        eta=spec.eta,
        alpha_max=spec.alpha_max,
        n_max=spec.n_max,
        seed=seed,
        planner_enabled=False,
    )
    result = search("oracle question", config, OracleWorld(spec.world, seed=seed), stop_on_threshold=True)
    stats_ = result.report.tree_stats
    return bool(stats_["reached_threshold"]), stats_["expansions"]


def simulate_point(budget: int, spec: SweepSpec) -> SweepPoint:
    successes = 0
    expansions = 0
    for i in range(spec.trials):
        ok, n = run_trial(budget, spec.base_seed + i, spec)
        successes += ok
        expansions += n
    ci = stats.binomtest(successes, spec.trials).proportion_ci(confidence_level=0.95)
    return SweepPoint(budget, spec.trials, successes, successes / spec.trials, ci.low, ci.high, expansions / spec.trials)


def run_sweep(spec: SweepSpec) -> list[SweepPoint]:
    return [simulate_point(b, spec) for b in spec.resolved_budgets()]


def not_below(successes: int, trials: int, target: float, confidence: float = 0.99) -> bool:
    """One-sided binomial test: True unless the rate is significantly below ``target``."""
    p = stats.binomtest(successes, trials, target, alternative="less").pvalue
    return p >= 1 - confidence


def sweep_document(spec: SweepSpec, points: list[SweepPoint]) -> str:
    bound = spec.bound()
    return json.dumps(
        {
            "analytic": {"K": bound.k, "p_min": bound.p_min, "M": bound.m, "eps": bound.eps},
            "world": asdict(spec.world),
            "trials": spec.trials,
            "points": [p.to_dict() for p in points],
        },
        indent=2,
    )
