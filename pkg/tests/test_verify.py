import dataclasses
import json
import random

import pytest

from wmsr_lab.adversary import Constant, Ramp, is_malicious_at
from wmsr_lab.graph import Digraph, PreconditionError, Verdict, classify_pair, find_non_robust_witness
from wmsr_lab.sim import Scenario, check_safety, gap_diagnostics, run
from wmsr_lab.verify import (
    NotApplicable,
    build_counterexample,
    normal_deviations,
    random_scenario,
    run_counterexample,
    theorem_report,
    trial_seeds,
    verify_necessity,
    verify_sufficiency_sweep,
)
from wmsr_lab.wmsr import DomainError


def test_counterexample_on_edgeless_graph():
    g = Digraph.empty(3)
    w = find_non_robust_witness(g, 1, 1)
    cx = build_counterexample(g, 0, w)
    assert cx.chi1 == cx.chi2 == frozenset()
    assert cx.scenario.adversaries == frozenset()
    assert cx.scenario.init == (0.0, 1.0, 0.5)
    res = run_counterexample(cx)
    assert res.diverged
    assert set(res.envelope.gaps) == {1.0}


def test_counterexample_on_cycle_f1():
    g = Digraph.cycle(3)
    w = find_non_robust_witness(g, 2, 2)
    cx = build_counterexample(g, 1, w)
    assert len(cx.scenario.adversaries) <= 1
    assert len(cx.chi1) + len(cx.chi2) < 2


def test_pinned_adversaries_in_counterexample():
    # node 0 hears from 2 and 3, so with S1 = {0, 1} it has two outside neighbors
    g = Digraph(4, frozenset({(2, 0), (3, 0)}))
    wit = classify_pair(g, {0, 1}, {2}, 2, 2)
    assert wit.verdict is Verdict.NONE and wit.xi1 == {0} and wit.xi2 == frozenset()
    cx = build_counterexample(g, 1, wit, horizon=30)
    assert cx.scenario.programs == {0: Constant(0.0)}
    assert cx.scenario.init == (0.0, 0.0, 1.0, 0.5)
    res = run_counterexample(cx)
    assert res.diverged
    assert all(x[0] == 0.0 and x[1] == 0.0 and x[2] == 1.0 for x in res.trace.steps)


def test_build_rejects_inconsistent_witness():
    g = Digraph.complete(4)
    w = find_non_robust_witness(Digraph.empty(4), 2, 2)
    with pytest.raises(DomainError):
        build_counterexample(g, 1, w)
    with pytest.raises(DomainError):
        build_counterexample(Digraph.empty(4), 0, w)


def test_necessity_not_applicable_on_robust_graph():
    assert find_non_robust_witness(Digraph.complete(4), 1, 1) is None
    with pytest.raises(NotApplicable):
        verify_necessity(Digraph.complete(4), 0)


def test_necessity_on_random_nonrobust_graphs():
    rng = random.Random(4)
    done = 0
    while done < 30:
        n = rng.randint(2, 7)
        F = rng.choice((0, 1))
        if F + 1 > n:
            continue
        g = Digraph.random(n, rng.uniform(0.1, 0.8), rng)
        if find_non_robust_witness(g, F + 1, F + 1) is None:
            continue
        res = verify_necessity(g, F, horizon=40)
        assert res.diverged
        assert set(res.envelope.gaps) == {1.0}
        done += 1


def test_sufficiency_k4():
    rep = verify_sufficiency_sweep(Digraph.complete(4), 1, trials=10, horizon=200, seed=3)
    assert rep.passed
    assert all(t.converged for t in rep.trials)


def test_sufficiency_plain_consensus():
    rep = verify_sufficiency_sweep(Digraph.complete(3), 0, trials=5, horizon=100)
    assert rep.passed and all(t.adversaries == [] for t in rep.trials)


def test_sufficiency_huge_ramp():
    g = Digraph.complete(5)
    sc = Scenario(g, 1, {4}, {4: Ramp(0.0, 1e9)}, (0.1, 0.9, 0.3, 0.7, 0.5), horizon=200)
    trace, env = run(sc)
    assert gap_diagnostics(env, 1e-6).converged
    assert check_safety(trace, env, g, sc.assignment, 1) == []


def test_sufficiency_not_applicable():
    with pytest.raises(NotApplicable):
        verify_sufficiency_sweep(Digraph.cycle(3), 1, trials=2)


def test_normals_never_deviate_in_random_runs():
    rng = random.Random(8)
    for _ in range(30):
        g = Digraph.random(6, 0.5, rng)
        sc = random_scenario(g, 1, rng, 20)
        trace, _ = run(sc)
        assert normal_deviations(trace, sc) == []


def test_trial_seeds_deterministic():
    assert trial_seeds(5, 4) == trial_seeds(5, 4)
    assert trial_seeds(5, 4) != trial_seeds(6, 4)


def test_theorem_report_branches():
    robust = theorem_report(Digraph.complete(4), 1, trials=4, horizon=150)
    assert robust.robust and robust.consistent and robust.necessity is None
    edgeless = theorem_report(Digraph.empty(3), 0, trials=2, horizon=30)
    assert not edgeless.robust and edgeless.consistent and edgeless.necessity.diverged
    cyc = theorem_report(Digraph.cycle(3), 1, trials=2, horizon=30)
    assert not cyc.robust and cyc.consistent
    data = json.loads(json.dumps(robust.to_dict()))
    assert data["sufficiency"]["label"] == "sampled evidence"
    assert len(data["sufficiency"]["trials"]) == 4
    assert {"seed", "horizon", "tol", "witness", "consistent"} <= set(data)


def test_theorem_report_preconditions():
    with pytest.raises(PreconditionError):
        theorem_report(Digraph.empty(1), 0)
    with pytest.raises(PreconditionError):
        theorem_report(Digraph.complete(3), 3)


def test_report_is_reproducible():
    a = theorem_report(Digraph.complete(4), 1, trials=3, horizon=100, seed=7).to_dict()
    b = theorem_report(Digraph.complete(4), 1, trials=3, horizon=100, seed=7).to_dict()
    assert a == b


def test_parallel_sweep_matches_serial():
    g = Digraph.complete(4)
    a = verify_sufficiency_sweep(g, 1, trials=4, horizon=80, seed=2)
    b = verify_sufficiency_sweep(g, 1, trials=4, horizon=80, seed=2, jobs=2)
    assert [dataclasses.asdict(t) for t in a.trials] == [dataclasses.asdict(t) for t in b.trials]


def test_counterexample_adversaries_detected_when_deviating():
    rng = random.Random(12)
    seen = 0
    while seen < 15:
        n = rng.randint(3, 7)
        g = Digraph.random(n, rng.uniform(0.3, 0.9), rng)
        w = find_non_robust_witness(g, 2, 2)
        if w is None or not (w.xi1 | w.xi2):
            continue
        seen += 1
        res = run_counterexample(build_counterexample(g, 1, w, horizon=25))
        sc = res.counterexample.scenario
        for a in sc.adversaries:
            for t in range(25):
                assert is_malicious_at(res.trace, g, a, t, 1) == (t in res.malicious_at[a])
