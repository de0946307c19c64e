"""The per-node W-MSR update.

A normal node sorts its inclusive neighbors by value (ties broken by node
id), drops up to ``F`` strictly smaller values from the front and up to
``F`` strictly larger values from the back, and moves to a convex
combination of what remains.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from .graph import Digraph, NodeId, inclusive_neighbors

ValueMap = Union[Sequence[float], Mapping[int, float]]

WEIGHT_SUM_TOL = 1e-12


class DomainError(ValueError):
    """A node or value the operation needs is missing."""


class WeightPolicyError(ValueError):
    """Weights that break one of the three weight conditions."""

    def __init__(self, violations: list[WeightViolation]):
        self.violations = violations
        super().__init__("weight conditions violated: " + ", ".join(v.value for v in violations))


def value_of(vals: ValueMap, j: NodeId) -> float:
    try:
        return vals[j]
    except (KeyError, IndexError):
        raise DomainError(f"no value for node {j}") from None


def sort_inclusive_neighbors(g: Digraph, i: NodeId, vals: ValueMap) -> tuple[int, ...]:
    """J_i ordered by ``(value, node id)``."""
    return tuple(sorted(inclusive_neighbors(g, i), key=lambda j: (value_of(vals, j), j)))


@dataclass(frozen=True)
class RemovalRecord:
    node: int
    r_less: tuple[int, ...]
    kept: tuple[int, ...]
    r_greater: tuple[int, ...]

    @property
    def full(self) -> tuple[int, ...]:
        return self.r_less + self.kept + self.r_greater

    @property
    def removed(self) -> frozenset[int]:
        return frozenset(self.r_less) | frozenset(self.r_greater)


def remove_extremes(i: NodeId, ordered: Sequence[int], vals: ValueMap, F: int) -> RemovalRecord:
    """Split a sorted inclusive-neighbor list into (R_i^<, kept, R_i^>).

    Node ``j`` at position ``k`` is kept iff
    ``(x_j >= x_i or k >= F) and (x_j <= x_i or k <= len - F - 1)``.
    """
    if F < 0:
        raise ValueError(f"F must be nonnegative, got {F}")
    ordered = tuple(ordered)
    if i not in ordered:
        raise DomainError(f"node {i} is not in its own neighbor list")
    xi = value_of(vals, i)
    last_kept = len(ordered) - F - 1
    less, kept, greater = [], [], []
    for k, j in enumerate(ordered):
        xj = value_of(vals, j)
        if xj < xi and k < F:
            less.append(j)
        elif xj > xi and k > last_kept:
            greater.append(j)
        else:
            kept.append(j)
    return RemovalRecord(i, tuple(less), tuple(kept), tuple(greater))


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


class WeightViolation(enum.Enum):
    BAD_ALPHA = "BadAlpha"
    OUTSIDE_NEIGHBORHOOD = "OutsideNeighborhood"
    REMOVED_NONZERO = "RemovedNonzero"
    BELOW_ALPHA = "BelowAlpha"
    SUM_NOT_ONE = "SumNotOne"


@dataclass(frozen=True)
class Weights:
    """Weights ``w_ij(t)`` one node uses in one step, and their lower bound."""

    values: Mapping[int, float]
    alpha: float

    def __getitem__(self, j: int) -> float:
        return self.values.get(j, 0.0)


WeightPolicy = Callable[[RemovalRecord, Digraph], Weights]


def uniform_weights(record: RemovalRecord, g: Digraph) -> Weights:
    """Equal weight on every kept node; alpha = 1 / (max in-degree + 1).

    On a graph without edges every node weights only itself, and alpha is
    reported as 1/2 to stay inside the open interval (0, 1).
    """
    w = 1.0 / len(record.kept)
    return Weights({j: w for j in record.kept}, uniform_alpha(g))


def uniform_alpha(g: Digraph) -> float:
    return 1.0 / (g.max_in_degree + 1) if g.max_in_degree else 0.5


POLICIES: dict[str, WeightPolicy] = {"uniform": uniform_weights}


def get_policy(name: str) -> WeightPolicy:
    try:
        return POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown weight policy {name!r}; known: {sorted(POLICIES)}") from None


def check_weight_policy(
    weights: Weights, record: RemovalRecord, alpha: float | None = None
) -> list[WeightViolation]:
    """Violations of the three weight conditions, one entry per kind."""
    alpha = weights.alpha if alpha is None else alpha
    found: list[WeightViolation] = []
    if not 0 < alpha < 1:
        found.append(WeightViolation.BAD_ALPHA)
    neighborhood = set(record.full)
    removed = record.removed
    if any(w != 0 and j not in neighborhood for j, w in weights.values.items()):
        found.append(WeightViolation.OUTSIDE_NEIGHBORHOOD)
    if any(w != 0 and j in removed for j, w in weights.values.items()):
        found.append(WeightViolation.REMOVED_NONZERO)
    if any(weights[j] < alpha for j in record.kept):
        found.append(WeightViolation.BELOW_ALPHA)
    if abs(math.fsum(weights[j] for j in record.kept) - 1.0) > WEIGHT_SUM_TOL:
        found.append(WeightViolation.SUM_NOT_ONE)
    return found


def wmsr_update(i: NodeId, record: RemovalRecord, vals: ValueMap, weights: Weights) -> float:
    """Weighted sum of the kept values."""
    violations = check_weight_policy(weights, record)
    if violations:
        raise WeightPolicyError(violations)
    kept_vals = [value_of(vals, j) for j in record.kept]
    lo, hi = min(kept_vals), max(kept_vals)
    # Convexity is exact over the reals; keep it exact in floating point too.
    if lo == hi:
        return lo
    total = math.fsum(weights[j] * x for j, x in zip(record.kept, kept_vals))
    return min(max(total, lo), hi)


@dataclass(frozen=True)
class NodeUpdate:
    value: float
    record: RemovalRecord
    weights: Weights


def conforming_update(
    g: Digraph, i: NodeId, vals: ValueMap, F: int, policy: WeightPolicy = uniform_weights
) -> NodeUpdate:
    """The value node ``i`` would move to if it followed W-MSR on ``vals``."""
    record = remove_extremes(i, sort_inclusive_neighbors(g, i, vals), vals, F)
    weights = policy(record, g)
    return NodeUpdate(wmsr_update(i, record, vals, weights), record, weights)
