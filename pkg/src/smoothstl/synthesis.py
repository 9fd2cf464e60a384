"""Control synthesis by gradient ascent on smooth robustness.

The objective is ``J(u) = smooth_robustness(rollout(u)) - penalty * ||u||^2``.
Ascent uses Adam-style per-coordinate steps with backtracking: a step that
lowers ``J`` is rejected and the learning rate halved, so the accepted cost
trace never decreases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import System, as_controls, rollout, system_from_dict
from .error_semantics import (
    ErrorReport,
    error_interval,
    error_interval_signal_free,
    termination_threshold,
)
from .formula import (
    Always,
    And,
    Eventually,
    Formula,
    Or,
    Predicate,
    PredicateTable,
    Until,
    format_formula,
    horizon,
    iter_nodes,
    predicates,
    to_nnf,
)
from .gradients import value_and_grad_controls
from .parser import parse
from .semantics import Signal, robustness
from .smooth_ops import Interval
from .smooth_semantics import SRM, SmoothConfig, SmoothTrace


# ---------------------------------------------------------------- problem


@dataclass
class SynthesisProblem:
    system: System
    x0: np.ndarray
    T: int
    formula: Formula
    control_penalty: float = 0.01
    name: str = ""

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        if self.x0.shape != (self.system.n,):
            raise ValueError(f"x0 must have length {self.system.n}")
        if self.control_penalty < 0:
            raise ValueError("control_penalty must be non-negative")
        if horizon(self.formula) > self.T:
            raise ValueError(f"formula horizon {horizon(self.formula)} exceeds T={self.T}")
        self.formula = to_nnf(self.formula)

    @property
    def num_controls(self) -> int:
        return (self.T + 1) * self.system.m

    def signal(self, u) -> Signal:
        return rollout(self.system, u, self.x0)

    def cost(self, rho: float, u) -> float:
        return rho - self.control_penalty * float(np.sum(np.square(u)))

    def to_dict(self, cfg: SmoothConfig | None = None):
        preds = {}
        for p in predicates(self.formula):
            if not hasattr(p.mu, "c") or not p.has_constant_noise:
                raise ValueError(f"predicate {p.name!r} is not an affine predicate with constant noise")
            preds[p.name] = {"type": "affine", "c": list(p.mu.c), "b": p.mu.b, "noise": [p.noise_lo, p.noise_hi]}
        d = {
            "name": self.name,
            "system": self.system.to_dict(),
            "x0": self.x0.tolist(),
            "T": self.T,
            "formula": format_formula(self.formula),
            "predicates": preds,
            "control_penalty": self.control_penalty,
        }
        if cfg is not None:
            d["smooth"] = cfg.to_dict()
        return d


def problem_from_dict(d) -> tuple[SynthesisProblem, SmoothConfig | None]:
    """Build a problem (and its ``smooth`` section, if any) from the JSON layout."""
    system = system_from_dict(d["system"])
    table = PredicateTable(q=system.q)
    for name, spec in d.get("predicates", {}).items():
        kind = spec.get("type", "affine")
        noise = tuple(spec.get("noise", (0.0, 0.0)))
        if kind == "affine":
            table.affine(name, spec["c"], spec.get("b", 0.0), noise)
        elif kind == "box":
            table.box(name, spec["channels"], spec["lo"], spec["hi"], noise)
        else:
            raise ValueError(f"predicate {name!r}: unknown type {kind!r}")
    prob = SynthesisProblem(
        system,
        d["x0"],
        int(d["T"]),
        parse(d["formula"], table),
        float(d.get("control_penalty", 0.01)),
        d.get("name", ""),
    )
    cfg = SmoothConfig.from_dict(d["smooth"]) if "smooth" in d else None
    return prob, cfg


def load_problem(path) -> tuple[SynthesisProblem, SmoothConfig | None]:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


def save_problem(prob: SynthesisProblem, path, cfg: SmoothConfig | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(prob.to_dict(cfg), fh, indent=2)


# ---------------------------------------------------------------- options and results


@dataclass(frozen=True)
class ZeroInit:
    pass


@dataclass(frozen=True)
class UniformInit:
    lo: float = -0.1
    hi: float = 0.1


@dataclass(frozen=True)
class SolveOptions:
    """Optimizer settings.

    ``init`` is :class:`ZeroInit`, :class:`UniformInit` or an explicit control
    array. ``stop_threshold`` enables the certified stop once the exact
    robustness provably exceeds it. ``bounds`` picks the reported error
    interval: ``"signal"`` (evaluated at ``u*``), ``"signal_free"`` (needs
    ``range_bound`` unless the SRM is SRM1) or ``"auto"`` (signal-free for
    SRM1, signal-dependent otherwise).
    """

    max_iters: int = 500
    step_size: float = 0.05
    seed: int = 0
    init: object = UniformInit()
    stop_threshold: float | None = None
    grad_tol: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_backtracks: int = 10
    record_bounds: bool = True
    bounds: str = "auto"
    range_bound: float | None = None
    tune_every: int | None = None
    tune_alpha: float = 1e-3

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass
class SolveResult:
    u_star: np.ndarray
    smooth_value: float
    exact_value: float
    smooth_cost: float
    exact_cost: float
    error_interval: Interval
    iterations: int
    trace: list = field(default_factory=list)
    seed: int = 0
    cfg: SmoothConfig | None = None
    certified: bool = False
    stop_reason: str = "max_iters"
    stages: list = field(default_factory=list)

    @property
    def control_cost(self) -> float:
        return self.smooth_value - self.smooth_cost

    @property
    def certified_range(self) -> Interval:
        return Interval(self.smooth_value + self.error_interval.lo, self.smooth_value + self.error_interval.hi)

    def to_dict(self):
        return {
            "u_star": self.u_star.tolist(),
            "smooth_value": self.smooth_value,
            "exact_value": self.exact_value,
            "smooth_cost": self.smooth_cost,
            "exact_cost": self.exact_cost,
            "error_interval": self.error_interval.as_list(),
            "iterations": self.iterations,
            "seed": self.seed,
            "cfg": None if self.cfg is None else self.cfg.to_dict(),
            "certified": self.certified,
            "stop_reason": self.stop_reason,
            "stage_exact_values": [s.exact_value for s in self.stages],
        }

    def trace_csv(self) -> str:
        cols = ["iter", "smooth_rho", "exact_rho", "L", "U", "grad_norm", "smooth_cost", "srm"]
        lines = [",".join(cols)]
        for r in self.trace:
            lines.append(",".join(_fmt(r.get(c)) for c in cols))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------- optimizer


def initial_controls(prob: SynthesisProblem, init, seed: int) -> np.ndarray:
    shape = (prob.T + 1, prob.system.m)
    if isinstance(init, ZeroInit):
        return np.zeros(shape)
    if isinstance(init, UniformInit):
        return np.random.default_rng(seed).uniform(init.lo, init.hi, size=shape)
    u = as_controls(np.array(init, dtype=float), prob.system)
    if u.shape != shape:
        raise ValueError(f"initial controls must have shape {shape}, got {u.shape}")
    return u.copy()


def report_for(prob: SynthesisProblem, sig: Signal, cfg: SmoothConfig, opts: SolveOptions, trace=None) -> ErrorReport:
    mode = opts.bounds
    if mode == "auto":
        mode = "signal_free" if cfg.srm is SRM.SRM1 else "signal"
    if mode == "signal_free":
        return error_interval_signal_free(prob.formula, cfg, opts.range_bound)
    if mode == "signal":
        return error_interval(prob.formula, sig, cfg, trace=trace)
    raise ValueError(f"unknown bounds mode {opts.bounds!r}")


class _Objective:
    def __init__(self, prob, cfg):
        self.prob, self.cfg = prob, cfg

    def __call__(self, u):
        val, g, sig = value_and_grad_controls(self.prob.formula, self.prob.system, u, self.prob.x0, self.cfg)
        pen = self.prob.control_penalty
        J = val - pen * float(np.sum(u * u))
        if not math.isfinite(J):
            raise FloatingPointError("objective became non-finite")
        return J, g - 2.0 * pen * u, val, sig


def _ascend(prob: SynthesisProblem, schedule, opts: SolveOptions, u0: np.ndarray) -> SolveResult:
    """Shared loop; ``schedule(i)`` returns the SmoothConfig active at iteration ``i``."""
    u = u0.copy()
    m = np.zeros_like(u)
    v = np.zeros_like(u)
    lr = opts.step_size
    cfg = last_scheduled = schedule(0)
    obj = _Objective(prob, cfg)
    J, g, val, sig = obj(u)
    trace = []
    stop, certified, it = "max_iters", False, 0
    adam_t = 0

    def record(i):
        rec = {"iter": i, "smooth_rho": val, "grad_norm": float(np.linalg.norm(g)), "smooth_cost": J, "srm": cfg.srm.value}
        if opts.record_bounds:
            rep = report_for(prob, sig, cfg, opts)
            rec.update(exact_rho=robustness(prob.formula, sig), L=rep.lo, U=rep.hi)
        trace.append(rec)

    def check_stop():
        if opts.stop_threshold is None:
            return False
        rep = report_for(prob, sig, cfg, opts)
        return val >= termination_threshold(opts.stop_threshold, rep)

    record(0)
    if check_stop():
        stop, certified = "certified", True
    elif np.linalg.norm(g) < opts.grad_tol:
        stop = "grad_tol"
    else:
        for it in range(1, opts.max_iters + 1):
            scheduled = schedule(it - 1)
            # Tuned parameters persist until the schedule switches configuration.
            new_cfg = scheduled if scheduled != last_scheduled else cfg
            last_scheduled = scheduled
            if opts.tune_every and (it - 1) % opts.tune_every == 0 and it > 1:
                new_cfg = tune_parameters(prob.formula, new_cfg, opts.tune_alpha, "global", opts.range_bound, signal=sig)
            if new_cfg != cfg:
                cfg = new_cfg
                obj = _Objective(prob, cfg)
                J, g, val, sig = obj(u)
            adam_t += 1
            m = opts.beta1 * m + (1 - opts.beta1) * g
            v = opts.beta2 * v + (1 - opts.beta2) * g * g
            direction = (m / (1 - opts.beta1**adam_t)) / (np.sqrt(v / (1 - opts.beta2**adam_t)) + opts.eps)
            accepted = False
            for _ in range(opts.max_backtracks + 1):
                cand = u + lr * direction
                Jc, gc, valc, sigc = obj(cand)
                if Jc >= J:
                    accepted = True
                    break
                lr *= 0.5
            if accepted:
                u, J, g, val, sig = cand, Jc, gc, valc, sigc
                lr = min(lr * 1.25, opts.step_size)
            record(it)
            if check_stop():
                stop, certified = "certified", True
                break
            if np.linalg.norm(g) < opts.grad_tol:
                stop = "grad_tol"
                break
    return _finish(prob, cfg, opts, u, val, sig, trace, it, stop, certified)


def _finish(prob, cfg, opts, u, val, sig, trace, iters, stop, certified) -> SolveResult:
    rep = report_for(prob, sig, cfg, opts)
    exact = robustness(prob.formula, sig)
    return SolveResult(
        u_star=u,
        smooth_value=val,
        exact_value=exact,
        smooth_cost=prob.cost(val, u),
        exact_cost=prob.cost(exact, u),
        error_interval=rep.interval,
        iterations=iters,
        trace=trace,
        seed=opts.seed,
        cfg=cfg,
        certified=certified,
        stop_reason=stop,
    )


def optimize(prob: SynthesisProblem, cfg: SmoothConfig, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Maximise ``smooth_robustness - penalty * ||u||^2`` from the configured start."""
    u0 = initial_controls(prob, opts.init, opts.seed)
    return _ascend(prob, lambda i: cfg, opts, u0)


def optimize_switching(
    prob: SynthesisProblem,
    cfg_srm2: SmoothConfig,
    cfg_srm3: SmoothConfig,
    period: int,
    opts: SolveOptions = SolveOptions(),
) -> tuple[SolveResult, float]:
    """Alternate SRM2 and SRM3 every ``period`` iterations, starting with SRM2.

    Returns the result and ``gap = srm3(u*) - srm2(u*)``. With noise disabled,
    the exact robustness at ``u*`` lies between the two smooth values.
    """
    if cfg_srm2.srm is not SRM.SRM2 or cfg_srm3.srm is not SRM.SRM3:
        raise ValueError("optimize_switching needs an SRM2 and an SRM3 configuration")
    if period < 1:
        raise ValueError("period must be at least 1")
    u0 = initial_controls(prob, opts.init, opts.seed)
    res = _ascend(prob, lambda i: cfg_srm2 if (i // period) % 2 == 0 else cfg_srm3, opts, u0)
    sig = prob.signal(res.u_star)
    lo = SmoothTrace(prob.formula, sig.samples, cfg_srm2).value
    hi = SmoothTrace(prob.formula, sig.samples, cfg_srm3).value
    return res, hi - lo


def warm_start_chain(prob: SynthesisProblem, stages: Sequence[tuple[SmoothConfig, SolveOptions]]) -> SolveResult:
    """Run each stage from the previous stage's ``u*``; the first uses its own init."""
    if not stages:
        raise ValueError("warm_start_chain needs at least one stage")
    results = []
    for i, (cfg, opts) in enumerate(stages):
        if i > 0:
            opts = replace(opts, init=results[-1].u_star)
        results.append(optimize(prob, cfg, opts))
    final = results[-1]
    final.stages = results
    return final


# ---------------------------------------------------------------- parameter tuning


def _used_params(f: Formula) -> dict[str, tuple[bool, bool]]:
    """For each operator node, whether its smooth-min / smooth-max parameter is used."""
    out = {}
    for path, node in iter_nodes(f):
        if isinstance(node, (And, Always)):
            out[path] = (True, False)
        elif isinstance(node, (Or, Eventually)):
            out[path] = (False, True)
        elif isinstance(node, Until):
            out[path] = (True, True)
    return out


def tune_parameters(
    f: Formula,
    cfg: SmoothConfig,
    alpha: float,
    mode: str = "global",
    range_bound: float | None = None,
    signal=None,
    grid: Sequence[float] | None = None,
    sweeps: int = 4,
) -> SmoothConfig:
    """Minimise ``width + alpha * ||theta||^2`` over positive smoothing parameters.

    The width is the signal-free bound width, or the signal-dependent one when
    ``signal`` is given. ``global`` tunes the shared ``(k1, k2)`` pair;
    ``pernode`` tunes one override per operator node, counting only the
    parameters each node actually uses. The starting configuration is always
    a candidate, so the result never scores worse than ``cfg``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    f = to_nnf(f)
    mode = mode.lower().replace("_", "")
    grid = np.logspace(-1, 2.5, 36) if grid is None else np.asarray(grid, dtype=float)
    used = _used_params(f)
    if not used:
        return cfg

    if mode == "global":
        need = (any(a for a, _ in used.values()), any(b for _, b in used.values()))
        names = [i for i in (0, 1) if need[i]]

        def build(theta):
            k = [cfg.k1, cfg.k2]
            for i, val in zip(names, theta):
                k[i] = val
            return cfg.replace(k1=k[0], k2=k[1], overrides={})

        start = [(cfg.k1, cfg.k2)[i] for i in names]
    elif mode == "pernode":
        nodes = dict(iter_nodes(f))
        slots = [(p, i) for p, flags in used.items() for i in (0, 1) if flags[i]]
        names = slots

        def build(theta):
            ov = {p: list(cfg.params(p, nodes[p])) for p in used}
            for (p, i), val in zip(slots, theta):
                ov[p][i] = val
            return cfg.replace(overrides={p: tuple(v) for p, v in ov.items()})

        start = [cfg.params(p, nodes[p])[i] for p, i in slots]
    else:
        raise ValueError(f"unknown tuning mode {mode!r}; use 'global' or 'pernode'")

    def width_of(c):
        if signal is not None:
            return error_interval(f, signal, c).width
        return error_interval_signal_free(f, c, range_bound).width

    def score(theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0):
            return math.inf
        return width_of(build(theta)) + alpha * float(theta @ theta)

    best = np.array(start, dtype=float)
    best_score = score(best)
    # Shared grid seed: every coordinate set to the same value.
    for g in grid:
        cand = np.full(len(names), g)
        s = score(cand)
        if s < best_score:
            best, best_score = cand, s
    lo, hi = np.log(grid.min()), np.log(grid.max())
    for _ in range(sweeps):
        improved = False
        for i in range(len(names)):
            def along(logk, i=i):
                c = best.copy()
                c[i] = math.exp(logk)
                return score(c)

            r = minimize_scalar(along, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
            if r.fun < best_score - 1e-15:
                best = best.copy()
                best[i] = math.exp(r.x)
                best_score = r.fun
                improved = True
        if not improved:
            break
    return build(best)


def tuning_objective(f: Formula, cfg: SmoothConfig, alpha: float, range_bound=None, signal=None, mode="global") -> float:
    """Score used by :func:`tune_parameters` for a given configuration."""
    f = to_nnf(f)
    width = (error_interval(f, signal, cfg) if signal is not None else error_interval_signal_free(f, cfg, range_bound)).width
    used = _used_params(f)
    if mode.lower().replace("_", "") == "global":
        sq = (cfg.k1**2 if any(a for a, _ in used.values()) else 0.0) + (
            cfg.k2**2 if any(b for _, b in used.values()) else 0.0
        )
    else:
        sq = 0.0
        nodes = dict(iter_nodes(f))
        for p, (a, b) in used.items():
            k1, k2 = cfg.params(p, nodes[p])
            sq += (k1**2 if a else 0.0) + (k2**2 if b else 0.0)
    return width + alpha * sq
