"""Smooth robustness measures for signal temporal logic.

Exact and smooth robust semantics, certified error intervals, exact
gradients through discrete-time dynamics, and gradient-based control
synthesis.
"""

from .dynamics import LinearSystem, System, linear_system, rollout, single_integrator_2d
from .error_semantics import (
    ErrorReport,
    accuracy_bound,
    certify,
    error_interval,
    error_interval_signal_free,
    termination_threshold,
)
from .formula import (
    Always,
    And,
    Eventually,
    Formula,
    Not,
    Or,
    Pred,
    Predicate,
    PredicateTable,
    Until,
    horizon,
    to_nnf,
)
from .gradients import finite_diff_grad, grad_wrt_controls, grad_wrt_signal, signal_jacobian
from .parser import parse
from .scp import build_scp
from .semantics import Signal, Verdict, robustness, satisfies
from .smooth_ops import BandMode, Interval, OpKind, op_error_band, smooth_op, smooth_op_grad
from .smooth_semantics import SRM, Guarantee, SmoothConfig, classify, smooth_robustness
from .synthesis import (
    SolveOptions,
    SolveResult,
    SynthesisProblem,
    UniformInit,
    ZeroInit,
    optimize,
    optimize_switching,
    tune_parameters,
    warm_start_chain,
)

__version__ = "0.1.0"
