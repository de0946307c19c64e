"""Executable pieces of the sufficiency argument.

The argument fixes limits ``A_M > A_m`` of the normal envelope, a tube width
``eps`` and a shrinking sequence of thresholds ``eps_l``, and shows that the
normal nodes above ``A_M - eps_l`` or below ``A_m + eps_l`` run out within
``N`` steps. The functions here compute each ingredient on concrete traces
so the steps can be checked rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .adversary import AdversaryAssignment
from .graph import NodeId
from .sim import Envelope, Trace
from .wmsr import DomainError, RemovalRecord, ValueMap, Weights, check_weight_policy, value_of, wmsr_update

CLOSED_FORM_TOL = 1e-12
CONTRACTION_TOL = 1e-12


class ScheduleError(ValueError):
    """Parameters for which the threshold sequence is not admissible."""


def admissibility_bound(alpha: float, eps0: float, N: int) -> float:
    """Largest tube width (exclusive) keeping every threshold positive."""
    a = alpha**N
    return a / (1.0 - a) * eps0


def epsilon_sequence(alpha: float, eps0: float, eps: float, N: int) -> list[float]:
    """``eps_0 .. eps_N`` with ``eps_l = alpha * eps_{l-1} - (1 - alpha) * eps``.

    No admissibility check; ``epsilon_schedule`` is the validated entry point.
    """
    out = [eps0]
    for _ in range(N):
        out.append(alpha * out[-1] - (1.0 - alpha) * eps)
    return out


@dataclass(frozen=True)
class EpsilonSchedule:
    alpha: float
    eps0: float
    eps: float
    N: int
    values: tuple[float, ...]

    def closed_form(self, l: int) -> float:
        return self.alpha**l * (self.eps0 + self.eps) - self.eps

    def __getitem__(self, l: int) -> float:
        return self.values[l]


def epsilon_schedule(alpha: float, eps0: float, eps: float, N: int) -> EpsilonSchedule:
    if not 0 < alpha < 1:
        raise ScheduleError(f"alpha must lie in (0, 1), got {alpha}")
    if eps0 <= 0:
        raise ScheduleError(f"eps0 must be positive, got {eps0}")
    if N < 1:
        raise ScheduleError(f"N must be at least 1, got {N}")
    bound = admissibility_bound(alpha, eps0, N)
    if not 0 < eps < bound:
        raise ScheduleError(f"eps={eps} must satisfy 0 < eps < alpha^N/(1-alpha^N)*eps0 = {bound}")
    sched = EpsilonSchedule(alpha, eps0, eps, N, tuple(epsilon_sequence(alpha, eps0, eps, N)))
    for l, v in enumerate(sched.values):
        if abs(v - sched.closed_form(l)) > CLOSED_FORM_TOL:
            raise ArithmeticError(f"recursion drifted from closed form at l={l}")
    return sched


@dataclass(frozen=True)
class LevelSets:
    x_M: frozenset[int]
    x_m: frozenset[int]
    A_M: float
    A_m: float
    eps_l: float
    t: int | None = None
    l: int | None = None


def level_sets(
    snapshot: ValueMap, A_M: float, A_m: float, eps_l: float, t: int | None = None, l: int | None = None
) -> LevelSets:
    """Nodes strictly above ``A_M - eps_l`` and strictly below ``A_m + eps_l``.

    Every node counts here, adversaries included.
    """
    if eps_l <= 0:
        raise ValueError(f"eps_l must be positive, got {eps_l}")
    nodes = range(len(snapshot)) if not hasattr(snapshot, "keys") else snapshot.keys()
    hi = A_M - eps_l
    lo = A_m + eps_l
    return LevelSets(
        frozenset(i for i in nodes if snapshot[i] > hi),
        frozenset(i for i in nodes if snapshot[i] < lo),
        A_M,
        A_m,
        eps_l,
        t,
        l,
    )


def check_disjoint(ls: LevelSets) -> bool:
    return not (ls.x_M & ls.x_m)


def contraction_check(
    i: NodeId, record: RemovalRecord, vals: ValueMap, weights: Weights, M_t: float, c: float
) -> bool | None:
    """Is the update at most ``(1 - alpha) * M_t + alpha * c``?

    Returns None when the premises do not hold: some kept value exceeds
    ``M_t``, no kept value is at most ``c``, or the weights are not
    alpha-bounded.
    """
    kept_vals = [value_of(vals, j) for j in record.kept]
    if max(kept_vals) > M_t or min(kept_vals) > c or check_weight_policy(weights, record):
        return None
    a = weights.alpha
    return wmsr_update(i, record, vals, weights) <= (1.0 - a) * M_t + a * c + CONTRACTION_TOL


@dataclass(frozen=True)
class ShrinkReport:
    ok: bool
    first_empty: int | None
    s1: tuple[int, ...]
    s2: tuple[int, ...]
    vacuous: bool = False


def shrinking_counts(
    trace: Trace,
    A_M: float,
    A_m: float,
    schedule: EpsilonSchedule,
    t_eps: int,
    assignment: AdversaryAssignment,
) -> ShrinkReport:
    """Track normal-node counts of the level sets along ``t_eps + l``.

    While both counts are positive, neither may grow and at least one must
    drop. ``ok`` means that held and one count reached zero by ``l = N``.
    If the level sets already overlap at ``l = 0`` (``A_M - eps_0 <= A_m +
    eps_0``) the argument has nothing to say and the report is vacuous.
    """
    N = schedule.N
    if t_eps < 0 or t_eps + N > trace.horizon:
        raise DomainError(f"trace of horizon {trace.horizon} does not cover steps {t_eps}..{t_eps + N}")
    if A_M - schedule[0] <= A_m + schedule[0]:
        return ShrinkReport(True, None, (), (), vacuous=True)
    n = len(trace.steps[0])
    normal = frozenset(assignment.normal(n))
    s1: list[int] = []
    s2: list[int] = []
    first_empty = None
    ok = True
    for l in range(N + 1):
        ls = level_sets(trace.steps[t_eps + l], A_M, A_m, schedule[l], t_eps + l, l)
        s1.append(len(ls.x_M & normal))
        s2.append(len(ls.x_m & normal))
        if l > 0:
            grew = s1[l] > s1[l - 1] or s2[l] > s2[l - 1]
            dropped = s1[l] < s1[l - 1] or s2[l] < s2[l - 1]
            if grew or not dropped:
                ok = False
                break
        if s1[l] == 0 or s2[l] == 0:
            first_empty = l
            break
    return ShrinkReport(ok and first_empty is not None, first_empty, tuple(s1), tuple(s2))


# ---------------------------------------------------------------------------
# Picking parameters from a finished run
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowAnalysis:
    A_M: float
    A_m: float
    schedule: EpsilonSchedule
    t_eps: int
    report: ShrinkReport


def select_t_eps(envelope: Envelope, A_M: float, A_m: float, eps: float) -> int | None:
    """Smallest t with ``M(t) < A_M + eps`` and ``m(t) > A_m - eps``."""
    for t, (lo, hi) in enumerate(zip(envelope.m, envelope.M)):
        if hi < A_M + eps and lo > A_m - eps:
            return t
    return None


def analyze_window(
    trace: Trace,
    envelope: Envelope,
    assignment: AdversaryAssignment,
    alpha: float,
    at: int | None = None,
    min_gap: float = 1e-9,
) -> WindowAnalysis | None:
    """Run the shrinking-count argument with limits estimated from the run.

    ``A_M`` and ``A_m`` are taken as ``M(at)`` and ``m(at)``. By default
    ``at`` is the latest step that still leaves ``N`` steps of trace after it
    and whose gap is at least ``min_gap``. ``eps0`` is a quarter of that gap
    and ``eps`` half the admissibility bound. Returns None when no such step
    exists.
    """
    N = len(assignment.normal(len(trace.steps[0])))
    gaps = envelope.gaps
    if at is None:
        usable = [t for t in range(trace.horizon - N + 1) if gaps[t] >= min_gap]
        if not usable:
            return None
        at = usable[-1]
    if not 0 <= at <= trace.horizon or gaps[at] < min_gap:
        return None
    A_M, A_m = envelope.M[at], envelope.m[at]
    eps0 = gaps[at] / 4.0
    eps = admissibility_bound(alpha, eps0, N) / 2.0
    if eps <= 0:
        return None
    schedule = epsilon_schedule(alpha, eps0, eps, N)
    t_eps = select_t_eps(envelope, A_M, A_m, eps)
    if t_eps is None or t_eps + N > trace.horizon:
        return None
    return WindowAnalysis(A_M, A_m, schedule, t_eps, shrinking_counts(trace, A_M, A_m, schedule, t_eps, assignment))
