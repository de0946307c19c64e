"""Command-line front end.

Exit codes: 0 success or consistent, 1 negative verdict, 2 input error,
3 nothing to do (for example, a counterexample requested on a robust graph).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .adversary import AdversaryAssignment
from .bounds import analyze_window
from .graph import Digraph, GraphError, PreconditionError, is_r_s_robust
from .sim import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    Scenario,
    ScenarioError,
    SimulationError,
    check_monotone,
    check_safety,
    check_validity,
    gap_diagnostics,
    run,
    write_trace,
)
from .verify import DEFAULT_SEED, DEFAULT_TRIALS, NotApplicable, build_counterexample, is_robust_for, theorem_report
from .wmsr import uniform_alpha

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NOT_APPLICABLE = 3


class InputError(Exception):
    pass


def _emit(obj: dict, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_graph(path: str) -> Digraph:
    try:
        return Digraph.load(path)
    except OSError as exc:
        raise InputError(f"cannot read graph file: {exc}") from None
    except GraphError as exc:
        raise InputError(f"bad graph file {path}: {exc}") from None


def _load_scenario(path: str) -> Scenario:
    try:
        return Scenario.load(path)
    except OSError as exc:
        raise InputError(f"cannot read scenario file: {exc}") from None
    except ScenarioError as exc:
        raise InputError(f"bad scenario file {path}: {exc}") from None


def cmd_check_robust(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    try:
        robust, witness = is_r_s_robust(g, args.r, args.s, args.cap)
    except PreconditionError as exc:
        raise InputError(str(exc)) from None
    _emit(
        {
            "n": g.n,
            "r": args.r,
            "s": args.s,
            "robust": robust,
            "witness": witness.to_dict() if witness else None,
        }
    )
    return EXIT_OK if robust else EXIT_NEGATIVE


def cmd_simulate(args: argparse.Namespace) -> int:
    sc = _load_scenario(args.scenario)
    horizon = sc.horizon if args.horizon is None else args.horizon
    try:
        trace, env = run(sc, horizon)
    except SimulationError as exc:
        raise InputError(str(exc)) from None
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_trace(trace, env, fh)
    gaps = gap_diagnostics(env, args.tol)
    _emit(
        {
            "horizon": horizon,
            "tol": args.tol,
            "converged": gaps.converged,
            "t_converged": gaps.t_converged,
            "final_gap": gaps.final_gap,
            "safety_violations": len(check_safety(trace, env, sc.graph, sc.assignment, sc.F)),
            "validity_violations": len(check_validity(env)),
            "monotone_violations": len(check_monotone(env)),
            "trace": args.out,
        }
    )
    return EXIT_OK


def cmd_counterexample(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    try:
        robust, witness = is_robust_for(g, args.F, args.cap)
    except PreconditionError as exc:
        raise InputError(str(exc)) from None
    if robust:
        print(f"graph is ({args.F + 1}, {args.F + 1})-robust; no counterexample exists", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    cx = build_counterexample(g, args.F, witness, args.horizon)
    data = cx.scenario.to_dict()
    data["witness"] = witness.to_dict()
    _emit(data, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    try:
        report = theorem_report(g, args.F, args.trials, args.horizon, args.tol, args.seed, args.jobs, args.cap)
    except PreconditionError as exc:
        raise InputError(str(exc)) from None
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.consistent else EXIT_NEGATIVE


def cmd_analyze(args: argparse.Namespace) -> int:
    sc = _load_scenario(args.scenario)
    horizon = sc.horizon if args.horizon is None else args.horizon
    try:
        trace, env = run(sc, horizon)
    except SimulationError as exc:
        raise InputError(str(exc)) from None
    alpha = uniform_alpha(sc.graph)
    window = analyze_window(trace, env, AdversaryAssignment(sc.adversaries, sc.F), alpha)
    if window is None:
        _emit({"applicable": False, "alpha": alpha, "final_gap": env.gaps[-1]})
        return EXIT_NOT_APPLICABLE
    rep = window.report
    _emit(
        {
            "applicable": True,
            "alpha": alpha,
            "A_M": window.A_M,
            "A_m": window.A_m,
            "eps0": window.schedule.eps0,
            "eps": window.schedule.eps,
            "schedule": list(window.schedule.values),
            "t_eps": window.t_eps,
            "ok": rep.ok,
            "first_empty": rep.first_empty,
            "counts_high": list(rep.s1),
            "counts_low": list(rep.s2),
        }
    )
    return EXIT_OK if rep.ok else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmsr-lab", description="W-MSR resilient consensus laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--cap", type=int, default=None, help="max n for exhaustive robustness checks (env WMSR_CAP)")

    p = sub.add_parser("check-robust", help="decide (r,s)-robustness of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_check_robust)

    p = sub.add_parser("simulate", help="run a scenario and summarize it")
    p.add_argument("--scenario", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", default=None, help="write the JSON-lines trace here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterexample", help="build the non-consensus scenario for a non-robust graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--F", type=int, required=True)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("verify", help="check the robustness/consensus equivalence on one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--F", type=int, required=True)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="run the shrinking level-set check on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, NotApplicable, ValueError) as exc:
        if isinstance(exc, NotApplicable):
            print(str(exc), file=sys.stderr)
            return EXIT_NOT_APPLICABLE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
