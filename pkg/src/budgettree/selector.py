"""Candidate pool and budget-annealed node selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import ValueTree, rank_key

DEFAULT_N_MAX = 16


class SelectionError(ValueError):
    pass


@dataclass
class CandidatePool:
    max_size: int = DEFAULT_N_MAX
    entries: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.max_size < 1:
            raise SelectionError("pool max_size must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.entries

    def update(self, added: int | None, tree: ValueTree) -> int | None:
        """Insert ``added`` and evict the lowest-valued entry on overflow.

        Returns the evicted node id, if any. The newcomer itself may be the
        one evicted when it is the pool minimum.
        """
        if added is None:
            return None
        if tree[added].is_terminal:
            raise SelectionError(f"terminal answer node {added} cannot enter the pool")
        if added in self.entries:
            return None
        self.entries.append(added)
        if len(self.entries) <= self.max_size:
            return None
        victim = min(self.entries, key=lambda i: (rank_key(tree[i].current_value), i))
        self.entries.remove(victim)
        return victim


def update_pool(pool: CandidatePool, added: int | None, tree: ValueTree) -> CandidatePool:
    pool.update(added, tree)
    return pool


@dataclass(frozen=True)
class SelectionDistribution:
    node_ids: tuple[int, ...]
    probabilities: tuple[float, ...]

    def probability(self, node_id: int) -> float:
        return self.probabilities[self.node_ids.index(node_id)]


def power_weights(values, alpha: float) -> np.ndarray:
    """Normalized ``v**alpha`` weights, computed in log space."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise SelectionError("cannot weight an empty pool")
    if np.any(v <= 0):
        raise SelectionError("values must be positive")
    logw = alpha * np.log(v)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def build_distribution(pool: CandidatePool, tree: ValueTree, alpha: float) -> SelectionDistribution:
    if not pool.entries:
        raise SelectionError("candidate pool is empty")
    if alpha < 1:
        raise SelectionError("alpha must be >= 1")
    ids = tuple(pool.entries)
    probs = power_weights([tree[i].current_value for i in ids], alpha)
    return SelectionDistribution(ids, tuple(float(p) for p in probs))


def uniform_distribution(pool: CandidatePool) -> SelectionDistribution:
    if not pool.entries:
        raise SelectionError("candidate pool is empty")
    n = len(pool.entries)
    return SelectionDistribution(tuple(pool.entries), (1.0 / n,) * n)


def sample(dist: SelectionDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; consumes exactly one uniform from ``rng``."""
    return dist.node_ids[draw_index(dist.probabilities, rng.random())]


def draw_index(probabilities, u: float) -> int:
    cdf = np.cumsum(probabilities)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(idx, len(probabilities) - 1)


def probability_floor(n_max: int, alpha_max: float, v_min: float = 0.1, v_max: float = 1.0) -> float:
    """Lower bound on any pooled node's selection probability."""
    return v_min**alpha_max / (n_max * v_max**alpha_max)
