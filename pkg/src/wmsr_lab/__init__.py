"""W-MSR resilient consensus laboratory.

Simulate normal and malicious nodes running W-MSR, decide (r, s)-robustness
of small digraphs exactly, and check both directions of the equivalence
between resilient asymptotic consensus and (F+1, F+1)-robustness.
"""

from .adversary import AdversaryAssignment, Constant, Oscillate, Ramp, Script, adversary_value, is_malicious_at
from .graph import Digraph, RobustnessWitness, Verdict, find_non_robust_witness, is_r_s_robust, xi_s_r
from .sim import Envelope, Scenario, Trace, run
from .verify import build_counterexample, theorem_report, verify_necessity, verify_sufficiency_sweep
from .wmsr import remove_extremes, sort_inclusive_neighbors, uniform_weights, wmsr_update

__all__ = [
    "AdversaryAssignment",
    "Constant",
    "Digraph",
    "Envelope",
    "Oscillate",
    "Ramp",
    "RobustnessWitness",
    "Scenario",
    "Script",
    "Trace",
    "Verdict",
    "adversary_value",
    "build_counterexample",
    "find_non_robust_witness",
    "is_malicious_at",
    "is_r_s_robust",
    "remove_extremes",
    "run",
    "sort_inclusive_neighbors",
    "theorem_report",
    "uniform_weights",
    "verify_necessity",
    "verify_sufficiency_sweep",
    "wmsr_update",
    "xi_s_r",
]
