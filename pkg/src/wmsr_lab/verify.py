"""Both directions of the consensus/robustness equivalence, at desk scale.

Robust at ``(F+1, F+1)``: sample adversary sets, programs and initial values
and check that every run converges safely. This is sampled evidence, not a
proof. Not robust: build the explicit counterexample from a failing pair
``(S1, S2)`` and check that its normal nodes never move.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .adversary import (
    Constant,
    MaliciousProgram,
    Oscillate,
    Ramp,
    Script,
    malicious_steps,
    program_to_dict,
)
from .bounds import analyze_window
from .graph import (
    Digraph,
    PreconditionError,
    RobustnessWitness,
    Verdict,
    classify_pair,
    find_non_robust_witness,
)
from .sim import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    Envelope,
    Scenario,
    Trace,
    check_monotone,
    check_safety,
    check_validity,
    gap_diagnostics,
    run,
)
from .wmsr import DomainError, get_policy, uniform_alpha

DEFAULT_SEED = 0
DEFAULT_TRIALS = 20


class NotApplicable(Exception):
    """The requested direction does not apply to this graph."""


# ---------------------------------------------------------------------------
# Necessity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleScenario:
    scenario: Scenario
    witness: RobustnessWitness
    chi1: frozenset[int]
    chi2: frozenset[int]


def build_counterexample(
    g: Digraph, F: int, witness: RobustnessWitness, horizon: int = DEFAULT_HORIZON
) -> CounterexampleScenario:
    """Pin the well-connected parts of S1 at 0 and of S2 at 1.

    The adversaries are the members of S1 and S2 with at least F+1
    in-neighbors outside their own set. Every other S1 node starts at 0,
    every other S2 node at 1, and the rest at 1/2. Weights are uniform.
    """
    r = F + 1
    if g.n < 2:
        raise DomainError("counterexample needs at least two nodes")
    if witness.r != r or witness.s != r:
        raise DomainError(f"witness was computed for ({witness.r}, {witness.s}), need ({r}, {r})")
    try:
        check = classify_pair(g, witness.s1, witness.s2, r, r)
    except (PreconditionError, ValueError) as exc:
        raise DomainError(f"witness does not fit the graph: {exc}") from None
    if check.verdict is not Verdict.NONE or check.xi1 != witness.xi1 or check.xi2 != witness.xi2:
        raise DomainError("witness is inconsistent with the graph")
    chi1, chi2 = check.xi1, check.xi2
    init = [0.5] * g.n
    for k in witness.s1:
        init[k] = 0.0
    for k in witness.s2:
        init[k] = 1.0
    programs: dict[int, MaliciousProgram] = {k: Constant(0.0) for k in chi1}
    programs.update({k: Constant(1.0) for k in chi2})
    scenario = Scenario(g, F, chi1 | chi2, programs, tuple(init), "uniform", horizon)
    return CounterexampleScenario(scenario, witness, chi1, chi2)


@dataclass
class NecessityResult:
    diverged: bool
    witness: RobustnessWitness
    counterexample: CounterexampleScenario
    trace: Trace
    envelope: Envelope
    malicious_at: dict[int, list[int]] = field(default_factory=dict)

    @property
    def effective_adversaries(self) -> list[int]:
        return sorted(k for k, steps in self.malicious_at.items() if steps)

    def to_dict(self) -> dict:
        return {
            "diverged": self.diverged,
            "witness": self.witness.to_dict(),
            "adversaries": sorted(self.counterexample.scenario.adversaries),
            "effective_adversaries": self.effective_adversaries,
            "first_malicious_step": {str(k): (v[0] if v else None) for k, v in sorted(self.malicious_at.items())},
            "horizon": self.trace.horizon,
            "final_gap": self.envelope.gaps[-1],
        }


def pinned_exactly(cx: CounterexampleScenario, trace: Trace) -> bool:
    """Normal S1 nodes hold exactly 0 and normal S2 nodes exactly 1 throughout."""
    low = cx.witness.s1 - cx.chi1
    high = cx.witness.s2 - cx.chi2
    return all(all(x[k] == 0.0 for k in low) and all(x[k] == 1.0 for k in high) for x in trace.steps)


def run_counterexample(cx: CounterexampleScenario) -> NecessityResult:
    sc = cx.scenario
    trace, env = run(sc)
    policy = get_policy(sc.policy)
    flagged = {a: malicious_steps(trace, sc.graph, a, sc.F, policy) for a in sorted(sc.adversaries)}
    return NecessityResult(pinned_exactly(cx, trace), cx.witness, cx, trace, env, flagged)


def verify_necessity(
    g: Digraph, F: int, horizon: int = DEFAULT_HORIZON, cap: int | None = None
) -> NecessityResult:
    witness = find_non_robust_witness(g, F + 1, F + 1, cap)
    if witness is None:
        raise NotApplicable(f"graph is ({F + 1}, {F + 1})-robust; no counterexample exists")
    return run_counterexample(build_counterexample(g, F, witness, horizon))


# ---------------------------------------------------------------------------
# Sufficiency
# ---------------------------------------------------------------------------


def random_program(rng: random.Random) -> MaliciousProgram:
    kind = rng.choice(("constant", "ramp", "oscillate", "script"))
    if kind == "constant":
        return Constant(rng.uniform(-5.0, 6.0))
    if kind == "ramp":
        slope = rng.choice((rng.uniform(-1.0, 1.0), rng.uniform(-1e6, 1e6)))
        return Ramp(rng.uniform(-2.0, 3.0), slope)
    if kind == "oscillate":
        return Oscillate(rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0), rng.uniform(1.5, 20.0))
    return Script(tuple(rng.uniform(-2.0, 3.0) for _ in range(rng.randint(1, 12))))


def random_scenario(g: Digraph, F: int, rng: random.Random, horizon: int) -> Scenario:
    """F-total adversary set of random size, random programs, init in [0, 1]."""
    size = rng.randint(0, min(F, g.n - 1))
    adversaries = frozenset(rng.sample(range(g.n), size))
    programs = {a: random_program(rng) for a in sorted(adversaries)}
    init = tuple(rng.random() for _ in range(g.n))
    return Scenario(g, F, adversaries, programs, init, "uniform", horizon)


def normal_deviations(trace: Trace, scenario: Scenario) -> list[tuple[int, int]]:
    """``(t, node)`` pairs where a normal node was caught deviating."""
    policy = get_policy(scenario.policy)
    return [
        (t, i)
        for i in scenario.normal
        for t in malicious_steps(trace, scenario.graph, i, scenario.F, policy)
    ]


@dataclass
class TrialResult:
    seed: int
    adversaries: list[int]
    programs: dict[str, dict]
    converged: bool
    t_converged: int | None
    final_gap: float
    safety_violations: int
    validity_violations: int
    monotone_violations: int
    shrink_ok: bool | None

    @property
    def passed(self) -> bool:
        return (
            self.converged
            and not self.safety_violations
            and not self.validity_violations
            and not self.monotone_violations
            and self.shrink_ok is not False
        )


def run_trial(g: Digraph, F: int, seed: int, horizon: int, tol: float) -> TrialResult:
    sc = random_scenario(g, F, random.Random(seed), horizon)
    trace, env = run(sc)
    gaps = gap_diagnostics(env, tol)
    window = analyze_window(trace, env, sc.assignment, uniform_alpha(g))
    return TrialResult(
        seed=seed,
        adversaries=sorted(sc.adversaries),
        programs={str(k): program_to_dict(p) for k, p in sorted(sc.programs.items())},
        converged=gaps.converged,
        t_converged=gaps.t_converged,
        final_gap=gaps.final_gap,
        safety_violations=len(check_safety(trace, env, g, sc.assignment, F)),
        validity_violations=len(check_validity(env)),
        monotone_violations=len(check_monotone(env)),
        shrink_ok=None if window is None or window.report.vacuous else window.report.ok,
    )


def trial_seeds(seed: int, trials: int) -> list[int]:
    master = random.Random(seed)
    return [master.getrandbits(63) for _ in range(trials)]


@dataclass
class SweepReport:
    seed: int
    horizon: int
    tol: float
    trials: list[TrialResult]

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    def to_dict(self) -> dict:
        return {
            "label": "sampled evidence",
            "seed": self.seed,
            "horizon": self.horizon,
            "tol": self.tol,
            "passed": self.passed,
            "trials": [dict(vars(t), passed=t.passed) for t in self.trials],
        }


def _run_trial_args(args: tuple) -> TrialResult:
    return run_trial(*args)


def verify_sufficiency_sweep(
    g: Digraph,
    F: int,
    trials: int = DEFAULT_TRIALS,
    horizon: int = 500,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    cap: int | None = None,
) -> SweepReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    robust, _ = is_robust_for(g, F, cap)
    if not robust:
        raise NotApplicable(f"graph is not ({F + 1}, {F + 1})-robust; sufficiency does not apply")
    work = [(g, F, s, horizon, tol) for s in trial_seeds(seed, trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_args, work))
    else:
        results = [run_trial(*w) for w in work]
    return SweepReport(seed, horizon, tol, results)


def is_robust_for(g: Digraph, F: int, cap: int | None = None) -> tuple[bool, RobustnessWitness | None]:
    w = find_non_robust_witness(g, F + 1, F + 1, cap)
    return w is None, w


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class TheoremReport:
    n: int
    edges: list[list[int]]
    F: int
    robust: bool
    witness: RobustnessWitness | None
    sufficiency: SweepReport | None
    necessity: NecessityResult | None
    seed: int
    horizon: int
    tol: float

    @property
    def consistent(self) -> bool:
        if self.robust:
            return self.sufficiency is not None and self.sufficiency.passed
        return self.necessity is not None and self.necessity.diverged

    def to_dict(self) -> dict:
        return {
            "graph": {"n": self.n, "edges": self.edges},
            "F": self.F,
            "r": self.F + 1,
            "s": self.F + 1,
            "robust": self.robust,
            "witness": self.witness.to_dict() if self.witness else None,
            "branch": "sufficiency" if self.robust else "necessity",
            "sufficiency": self.sufficiency.to_dict() if self.sufficiency else None,
            "necessity": self.necessity.to_dict() if self.necessity else None,
            "seed": self.seed,
            "horizon": self.horizon,
            "tol": self.tol,
            "consistent": self.consistent,
        }


def theorem_report(
    g: Digraph,
    F: int,
    trials: int = DEFAULT_TRIALS,
    horizon: int = 500,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    cap: int | None = None,
) -> TheoremReport:
    if g.n < 2:
        raise PreconditionError(f"need at least 2 nodes, got {g.n}")
    if not 0 < F + 1 <= g.n:
        raise PreconditionError(f"need 0 < F+1 <= n, got F={F}, n={g.n}")
    robust, witness = is_robust_for(g, F, cap)
    sufficiency = necessity = None
    if robust:
        sufficiency = verify_sufficiency_sweep(g, F, trials, horizon, tol, seed, jobs, cap)
    else:
        necessity = run_counterexample(build_counterexample(g, F, witness, horizon))
    return TheoremReport(
        g.n, [list(e) for e in sorted(g.edges)], F, robust, witness, sufficiency, necessity, seed, horizon, tol
    )
