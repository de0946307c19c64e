"""Synchronous simulation of W-MSR with malicious nodes.

Every round reads from the time-t snapshot only. Normal nodes apply the
W-MSR update; adversaries emit whatever their program dictates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

from .adversary import (
    AdversaryAssignment,
    MaliciousProgram,
    ProgramError,
    adversary_value,
    program_from_dict,
    program_to_dict,
    validate_assignment,
)
from .graph import Digraph, GraphError
from .wmsr import NodeUpdate, RemovalRecord, Weights, conforming_update, get_policy

SAFETY_TOL = 1e-12
DEFAULT_HORIZON = 200
DEFAULT_TOL = 1e-6


class ScenarioError(ValueError):
    """A scenario that breaks its own invariants."""


class SimulationError(RuntimeError):
    def __init__(self, t: int, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"step {t} failed: {cause}")


@dataclass(frozen=True)
class Scenario:
    graph: Digraph
    F: int
    adversaries: frozenset[int]
    programs: Mapping[int, MaliciousProgram]
    init: tuple[float, ...]
    policy: str = "uniform"
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self) -> None:
        object.__setattr__(self, "adversaries", frozenset(self.adversaries))
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        object.__setattr__(self, "programs", dict(self.programs))
        problem = validate_assignment(self.assignment)
        if problem:
            raise ScenarioError(problem)
        n = self.graph.n
        if any(not 0 <= a < n for a in self.adversaries):
            raise ScenarioError("adversary id out of range")
        if set(self.programs) != set(self.adversaries):
            missing = sorted(self.adversaries - set(self.programs))
            extra = sorted(set(self.programs) - self.adversaries)
            raise ScenarioError(
                f"every adversary needs exactly one program (missing {missing}, on normal nodes {extra})"
            )
        if len(self.init) != n:
            raise ScenarioError(f"init must give a value for all {n} nodes, got {len(self.init)}")
        if not all(math.isfinite(v) for v in self.init):
            raise ScenarioError("initial values must be finite")
        if self.horizon < 1:
            raise ScenarioError(f"horizon must be at least 1, got {self.horizon}")
        get_policy(self.policy)

    @property
    def assignment(self) -> AdversaryAssignment:
        return AdversaryAssignment(self.adversaries, self.F)

    @property
    def normal(self) -> list[int]:
        return self.assignment.normal(self.graph.n)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "F": self.F,
            "adversaries": sorted(self.adversaries),
            "programs": {str(k): program_to_dict(p) for k, p in sorted(self.programs.items())},
            "init": {str(k): v for k, v in enumerate(self.init)},
            "policy": self.policy,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> Scenario:
        try:
            graph = Digraph.from_dict(data["graph"] if "graph" in data else data)
            init_raw = data["init"]
            if isinstance(init_raw, Mapping):
                init = [None] * graph.n
                for k, v in init_raw.items():
                    idx = int(k)
                    if not 0 <= idx < graph.n:
                        raise ScenarioError(f"init names unknown node {k}")
                    init[idx] = float(v)
                if any(v is None for v in init):
                    raise ScenarioError("init must give a value for every node")
            else:
                init = [float(v) for v in init_raw]
            return cls(
                graph=graph,
                F=int(data["F"]),
                adversaries=frozenset(int(a) for a in data.get("adversaries", [])),
                programs={int(k): program_from_dict(p) for k, p in data.get("programs", {}).items()},
                init=tuple(init),
                policy=data.get("policy", "uniform"),
                horizon=int(data.get("horizon", DEFAULT_HORIZON)),
            )
        except ScenarioError:
            raise
        except (GraphError, ProgramError) as exc:
            raise ScenarioError(str(exc)) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc!r}") from None

    @classmethod
    def load(cls, path) -> Scenario:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)


@dataclass
class Trace:
    """Values at every step plus what each normal node removed and weighted."""

    steps: list[tuple[float, ...]]
    records: list[dict[int, RemovalRecord]] = field(default_factory=list)
    weights: list[dict[int, Weights]] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1


@dataclass
class Envelope:
    """Min and max over normal nodes at each step."""

    m: list[float]
    M: list[float]

    @classmethod
    def of(cls, steps: Sequence[Sequence[float]], normal: Sequence[int]) -> Envelope:
        if not normal:
            raise ScenarioError("envelope needs at least one normal node")
        return cls(
            [min(x[i] for i in normal) for x in steps],
            [max(x[i] for i in normal) for x in steps],
        )

    @property
    def gaps(self) -> list[float]:
        return [hi - lo for lo, hi in zip(self.m, self.M)]


def advance(scenario: Scenario, snapshot: Sequence[float], t: int) -> tuple[tuple[float, ...], dict[int, NodeUpdate]]:
    """One synchronous round, returning the new snapshot and each normal node's update."""
    g = scenario.graph
    policy = get_policy(scenario.policy)
    nxt = list(snapshot)
    updates: dict[int, NodeUpdate] = {}
    for i in range(g.n):
        if i in scenario.adversaries:
            nxt[i] = adversary_value(scenario.programs[i], t + 1, i)
        else:
            upd = conforming_update(g, i, snapshot, scenario.F, policy)
            updates[i] = upd
            nxt[i] = upd.value
    return tuple(nxt), updates


def step(scenario: Scenario, snapshot: Sequence[float], t: int) -> tuple[float, ...]:
    return advance(scenario, snapshot, t)[0]


def run(scenario: Scenario, horizon: int | None = None) -> tuple[Trace, Envelope]:
    horizon = scenario.horizon if horizon is None else horizon
    snapshot = scenario.init
    trace = Trace([snapshot])
    for t in range(horizon):
        try:
            snapshot, updates = advance(scenario, snapshot, t)
        except ValueError as exc:
            raise SimulationError(t, exc) from exc
        trace.steps.append(snapshot)
        trace.records.append({i: u.record for i, u in updates.items()})
        trace.weights.append({i: u.weights for i, u in updates.items()})
    return trace, Envelope.of(trace.steps, scenario.normal)


# ---------------------------------------------------------------------------
# Online checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SafetyViolation:
    t: int
    node: int
    value: float
    low: float
    high: float


@dataclass(frozen=True)
class EnvelopeViolation:
    t: int
    bound: str
    value: float
    reference: float


def check_safety(
    trace: Trace, envelope: Envelope, g: Digraph, assignment: AdversaryAssignment, F: int
) -> list[SafetyViolation]:
    """Normal nodes whose next value left [m(t), M(t)]."""
    out = []
    for t in range(len(trace.steps) - 1):
        lo, hi = envelope.m[t], envelope.M[t]
        nxt = trace.steps[t + 1]
        for i in assignment.normal(g.n):
            v = nxt[i]
            if v < lo - SAFETY_TOL or v > hi + SAFETY_TOL:
                out.append(SafetyViolation(t, i, v, lo, hi))
    return out


def check_validity(envelope: Envelope) -> list[EnvelopeViolation]:
    """Steps at which the normal values left the initial interval [m(0), M(0)]."""
    out = []
    m0, M0 = envelope.m[0], envelope.M[0]
    for t, (lo, hi) in enumerate(zip(envelope.m, envelope.M)):
        if lo < m0 - SAFETY_TOL:
            out.append(EnvelopeViolation(t, "m", lo, m0))
        if hi > M0 + SAFETY_TOL:
            out.append(EnvelopeViolation(t, "M", hi, M0))
    return out


def check_monotone(envelope: Envelope) -> list[EnvelopeViolation]:
    """Steps where M rose or m fell relative to the previous step."""
    out = []
    for t in range(1, len(envelope.m)):
        if envelope.M[t] > envelope.M[t - 1] + SAFETY_TOL:
            out.append(EnvelopeViolation(t, "M", envelope.M[t], envelope.M[t - 1]))
        if envelope.m[t] < envelope.m[t - 1] - SAFETY_TOL:
            out.append(EnvelopeViolation(t, "m", envelope.m[t], envelope.m[t - 1]))
    return out


@dataclass(frozen=True)
class GapReport:
    converged: bool
    t_converged: int | None
    gaps: list[float]
    tol: float

    @property
    def final_gap(self) -> float:
        return self.gaps[-1]


def gap_diagnostics(envelope: Envelope, tol: float = DEFAULT_TOL) -> GapReport:
    """Finite-horizon convergence: first t after which the gap stays below tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    gaps = envelope.gaps
    t_conv = None
    for t in range(len(gaps) - 1, -1, -1):
        if gaps[t] < tol:
            t_conv = t
        else:
            break
    return GapReport(t_conv is not None, t_conv, gaps, tol)


def write_trace(trace: Trace, envelope: Envelope, fh: IO[str]) -> None:
    """One JSON object per step."""
    for t, x in enumerate(trace.steps):
        row = {
            "t": t,
            "x": {str(i): v for i, v in enumerate(x)},
            "m": envelope.m[t],
            "M": envelope.M[t],
        }
        fh.write(json.dumps(row) + "\n")
