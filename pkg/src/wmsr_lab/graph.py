"""Directed graphs, neighbor sets and exact (r, s)-robustness checking.

Edges are ordered pairs ``(j, i)`` meaning that information flows from ``j``
to ``i``. Self-influence is never stored as an edge; it is folded into the
inclusive neighbor set instead.
"""

from __future__ import annotations

import enum
import json
import os
import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

NodeId = int
NodeSet = frozenset

DEFAULT_CAP = 12


class GraphError(ValueError):
    """Malformed graph or invalid node reference."""


class PreconditionError(ValueError):
    """Arguments outside the domain of a robustness query."""


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError(f"node count must be nonnegative, got {self.n}")
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in edges:
            if j == i:
                raise GraphError(f"self-loop on node {j}")
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise GraphError(f"edge ({j}, {i}) out of range for n={self.n}")
        object.__setattr__(self, "edges", edges)

    @cached_property
    def _in(self) -> tuple[frozenset[int], ...]:
        buckets: list[set[int]] = [set() for _ in range(self.n)]
        for j, i in self.edges:
            buckets[i].add(j)
        return tuple(frozenset(b) for b in buckets)

    @cached_property
    def in_masks(self) -> tuple[int, ...]:
        """In-neighbor sets as bitmasks, indexed by node."""
        return tuple(sum(1 << j for j in nbrs) for nbrs in self._in)

    @property
    def nodes(self) -> range:
        return range(self.n)

    def in_degree(self, i: NodeId) -> int:
        return len(in_neighbors(self, i))

    @property
    def max_in_degree(self) -> int:
        return max((len(s) for s in self._in), default=0)

    # construction helpers -------------------------------------------------

    @classmethod
    def complete(cls, n: int) -> Digraph:
        return cls(n, frozenset((j, i) for j in range(n) for i in range(n) if i != j))

    @classmethod
    def empty(cls, n: int) -> Digraph:
        return cls(n)

    @classmethod
    def cycle(cls, n: int) -> Digraph:
        """Directed cycle 0 -> 1 -> ... -> n-1 -> 0."""
        return cls(n, frozenset((k, (k + 1) % n) for k in range(n)))

    @classmethod
    def random(cls, n: int, p: float, rng: random.Random) -> Digraph:
        return cls(
            n,
            frozenset((j, i) for j in range(n) for i in range(n) if i != j and rng.random() < p),
        )

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, data: dict) -> Digraph:
        try:
            n = data["n"]
            raw = data.get("edges", [])
        except (KeyError, TypeError, AttributeError) as exc:
            raise GraphError(f"graph object needs 'n' and 'edges': {exc}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise GraphError("'n' must be an integer")
        edges = []
        for e in raw:
            if (
                not isinstance(e, (list, tuple))
                or len(e) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
            ):
                raise GraphError(f"edge must be a pair of integers, got {e!r}")
            edges.append((e[0], e[1]))
        if len(set(edges)) != len(edges):
            raise GraphError("duplicate edges")
        return cls(n, frozenset(edges))

    @classmethod
    def load(cls, path: str | os.PathLike) -> Digraph:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GraphError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)

    def dump(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")


def _check_node(g: Digraph, i: NodeId) -> None:
    if not (isinstance(i, int) and 0 <= i < g.n):
        raise GraphError(f"invalid node id {i!r} for graph with n={g.n}")


def _check_subset(g: Digraph, s: Iterable[NodeId]) -> frozenset[int]:
    s = frozenset(s)
    for i in s:
        _check_node(g, i)
    return s


def in_neighbors(g: Digraph, i: NodeId) -> frozenset[int]:
    _check_node(g, i)
    return g._in[i]


def inclusive_neighbors(g: Digraph, i: NodeId) -> frozenset[int]:
    return in_neighbors(g, i) | {i}


def xi_s_r(g: Digraph, s: Iterable[NodeId], r: int) -> frozenset[int]:
    """Members of ``s`` having at least ``r`` in-neighbors outside ``s``."""
    if r < 0:
        raise PreconditionError(f"r must be nonnegative, got {r}")
    s = _check_subset(g, s)
    return frozenset(i for i in s if len(g._in[i] - s) >= r)


# ---------------------------------------------------------------------------
# Robustness
# ---------------------------------------------------------------------------


class Verdict(enum.Enum):
    """Which robustness condition a pair satisfied, checked in order."""

    ALL_OF_S1 = "i"
    ALL_OF_S2 = "ii"
    ENOUGH_TOTAL = "iii"
    NONE = "none"


@dataclass(frozen=True)
class RobustnessWitness:
    s1: frozenset[int]
    s2: frozenset[int]
    xi1: frozenset[int]
    xi2: frozenset[int]
    r: int
    s: int
    verdict: Verdict

    def swapped(self) -> RobustnessWitness:
        verdict = {
            Verdict.ALL_OF_S1: Verdict.ALL_OF_S2,
            Verdict.ALL_OF_S2: Verdict.ALL_OF_S1,
        }.get(self.verdict, self.verdict)
        return RobustnessWitness(self.s2, self.s1, self.xi2, self.xi1, self.r, self.s, verdict)

    def to_dict(self) -> dict:
        return {
            "s1": sorted(self.s1),
            "s2": sorted(self.s2),
            "xi1": sorted(self.xi1),
            "xi2": sorted(self.xi2),
            "r": self.r,
            "s": self.s,
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RobustnessWitness:
        return cls(
            frozenset(data["s1"]),
            frozenset(data["s2"]),
            frozenset(data["xi1"]),
            frozenset(data["xi2"]),
            int(data["r"]),
            int(data["s"]),
            Verdict(data["verdict"]),
        )


def classify_pair(g: Digraph, s1: Iterable[NodeId], s2: Iterable[NodeId], r: int, s: int) -> RobustnessWitness:
    """Evaluate the three robustness conditions on one pair of sets."""
    s1, s2 = _check_subset(g, s1), _check_subset(g, s2)
    if not s1 or not s2 or s1 & s2:
        raise PreconditionError("s1 and s2 must be nonempty and disjoint")
    xi1, xi2 = xi_s_r(g, s1, r), xi_s_r(g, s2, r)
    if len(xi1) == len(s1):
        verdict = Verdict.ALL_OF_S1
    elif len(xi2) == len(s2):
        verdict = Verdict.ALL_OF_S2
    elif len(xi1) + len(xi2) >= s:
        verdict = Verdict.ENOUGH_TOTAL
    else:
        verdict = Verdict.NONE
    return RobustnessWitness(s1, s2, xi1, xi2, r, s, verdict)


def robustness_cap() -> int:
    """Largest graph the exhaustive check accepts; ``WMSR_CAP`` overrides."""
    raw = os.environ.get("WMSR_CAP")
    return int(raw) if raw else DEFAULT_CAP


def _check_query(g: Digraph, r: int, s: int, cap: int | None) -> None:
    cap = robustness_cap() if cap is None else cap
    if g.n < 2:
        raise PreconditionError(f"robustness needs n >= 2, got n={g.n}")
    if g.n > cap:
        raise PreconditionError(f"n={g.n} exceeds the exhaustive-check cap {cap}")
    if r < 0:
        raise PreconditionError(f"r must be nonnegative, got {r}")
    if not 1 <= s <= g.n:
        raise PreconditionError(f"s must lie in [1, {g.n}], got {s}")


def _assignments(n: int) -> Iterator[tuple[int, int]]:
    """Yield ``(s1_mask, s2_mask)`` for every 3-colouring of the nodes.

    Order is by the base-3 integer whose digit for node ``k`` (weight 3**k)
    is 0 (neither), 1 (S1) or 2 (S2).
    """
    digits = [0] * n
    s1 = s2 = 0
    yield s1, s2
    while True:
        k = 0
        while k < n and digits[k] == 2:
            digits[k] = 0
            s2 &= ~(1 << k)
            k += 1
        if k == n:
            return
        bit = 1 << k
        if digits[k] == 0:
            digits[k] = 1
            s1 |= bit
        else:
            digits[k] = 2
            s1 &= ~bit
            s2 |= bit
        yield s1, s2


def _xi_counts(g: Digraph, r: int) -> list[int]:
    """|X^r_S| for every subset mask S."""
    masks = g.in_masks
    size = 1 << g.n
    out = [0] * size
    for sub in range(1, size):
        outside = ~sub
        out[sub] = sum(
            1 for j in range(g.n) if sub >> j & 1 and (masks[j] & outside).bit_count() >= r
        )
    return out


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return frozenset(out)


def find_non_robust_witness(
    g: Digraph, r: int, s: int, cap: int | None = None
) -> RobustnessWitness | None:
    """First pair (in canonical order) violating all three conditions, or None.

    Pairs are unordered: an assignment is only examined when the smallest
    node of ``S1 | S2`` lies in ``S1``.
    """
    _check_query(g, r, s, cap)
    xi = _xi_counts(g, r)
    for s1, s2 in _assignments(g.n):
        if not s1 or not s2:
            continue
        union = s1 | s2
        if not (union & -union) & s1:
            continue
        c1, c2 = xi[s1], xi[s2]
        if c1 == s1.bit_count() or c2 == s2.bit_count() or c1 + c2 >= s:
            continue
        w = classify_pair(g, _mask_to_set(s1), _mask_to_set(s2), r, s)
        assert w.verdict is Verdict.NONE
        return w
    return None


def is_r_s_robust(
    g: Digraph, r: int, s: int, cap: int | None = None
) -> tuple[bool, RobustnessWitness | None]:
    witness = find_non_robust_witness(g, r, s, cap)
    return witness is None, witness
