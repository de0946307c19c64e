"""F-total malicious threat model.

Adversaries broadcast one value per step to every out-neighbor. Their values
come from deterministic programs; whether a node actually misbehaved is
judged afterwards by comparing what it sent with the W-MSR update it would
have produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .graph import Digraph, NodeId
from .wmsr import DomainError, WeightPolicy, conforming_update, uniform_weights

if TYPE_CHECKING:
    from .sim import Trace

MALICIOUS_TOL = 1e-9


class ProgramError(ValueError):
    """Malformed malicious program description."""


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t: int, i: NodeId) -> float:
        return self.value


@dataclass(frozen=True)
class Ramp:
    start: float
    slope: float

    def __call__(self, t: int, i: NodeId) -> float:
        return self.start + self.slope * t


@dataclass(frozen=True)
class Oscillate:
    center: float
    amplitude: float
    period: float

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ProgramError("oscillation period must be positive")

    def __call__(self, t: int, i: NodeId) -> float:
        return self.center + self.amplitude * math.sin(2.0 * math.pi * t / self.period)


@dataclass(frozen=True)
class Script:
    """Explicit per-step table; the last entry repeats forever."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ProgramError("script needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, t: int, i: NodeId) -> float:
        return self.values[min(t, len(self.values) - 1)]


MaliciousProgram = Constant | Ramp | Oscillate | Script

_KINDS = {
    "constant": (Constant, ("value",)),
    "ramp": (Ramp, ("start", "slope")),
    "oscillate": (Oscillate, ("center", "amplitude", "period")),
    "script": (Script, ("values",)),
}


def adversary_value(prog: MaliciousProgram, t: int, i: NodeId) -> float:
    if t < 0:
        raise ValueError(f"time step must be nonnegative, got {t}")
    return float(prog(t, i))


def program_to_dict(prog: MaliciousProgram) -> dict:
    for kind, (cls, fields) in _KINDS.items():
        if isinstance(prog, cls):
            out = {"kind": kind}
            for f in fields:
                v = getattr(prog, f)
                out[f] = list(v) if isinstance(v, tuple) else v
            return out
    raise ProgramError(f"unknown program type {type(prog).__name__}")


def program_from_dict(data: Mapping) -> MaliciousProgram:
    try:
        cls, fields = _KINDS[data["kind"]]
    except (KeyError, TypeError):
        raise ProgramError(f"program needs a 'kind' among {sorted(_KINDS)}: {data!r}") from None
    try:
        args = [data[f] for f in fields]
    except KeyError as exc:
        raise ProgramError(f"{data['kind']} program is missing {exc}") from None
    if cls is Script:
        return Script(tuple(args[0]))
    if not all(isinstance(a, (int, float)) and math.isfinite(a) for a in args):
        raise ProgramError(f"program parameters must be finite numbers: {data!r}")
    return cls(*(float(a) for a in args))


@dataclass(frozen=True)
class AdversaryAssignment:
    adversaries: frozenset[int]
    F: int

    @classmethod
    def of(cls, adversaries: Iterable[int], F: int) -> AdversaryAssignment:
        return cls(frozenset(adversaries), F)

    def is_adversary(self, i: NodeId) -> bool:
        return i in self.adversaries

    def normal(self, n: int) -> list[int]:
        return [i for i in range(n) if i not in self.adversaries]


def validate_assignment(assign: AdversaryAssignment) -> str | None:
    """None when the adversary set is F-total, else a description of the breach."""
    if assign.F < 0:
        return f"F must be nonnegative, got {assign.F}"
    if len(assign.adversaries) > assign.F:
        return (
            f"adversary set of size {len(assign.adversaries)} is not F-total "
            f"(at most F={assign.F} adversaries allowed)"
        )
    return None


def is_malicious_at(
    trace: Trace,
    g: Digraph,
    i: NodeId,
    t: int,
    F: int,
    policy: WeightPolicy = uniform_weights,
) -> bool:
    """Did node ``i`` send something other than its W-MSR update at step t+1?"""
    if not 0 <= t < len(trace.steps) - 1:
        raise DomainError(f"trace has no steps {t} and {t + 1}")
    expected = conforming_update(g, i, trace.steps[t], F, policy).value
    return abs(trace.steps[t + 1][i] - expected) > MALICIOUS_TOL


def malicious_steps(trace: Trace, g: Digraph, i: NodeId, F: int, policy: WeightPolicy = uniform_weights) -> list[int]:
    """All steps within the trace at which ``i`` deviated."""
    return [t for t in range(len(trace.steps) - 1) if is_malicious_at(trace, g, i, t, F, policy)]
