"""Certified intervals for ``exact - smooth`` robustness.

Intervals are propagated bottom-up. At each operator node the operator's own
band is added to the hull of its operands' intervals (lower ends combined by
min, upper ends by max). The signal-dependent variant evaluates Tight bands on
the smoothed operand values of an actual forward pass. The signal-free variant
uses bands that depend only on operand counts, so it needs constant predicate
noise and, for Soft operators, a bound on operand spread.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .formula import Always, And, Eventually, Formula, Not, Or, Pred, Until, child_path, iter_nodes
from .semantics import windows
from .smooth_ops import Interval, OpKind, tight_band, value_free_band
from .smooth_semantics import SmoothConfig, SmoothTrace, smooth_trace


@dataclass
class ErrorReport:
    interval: Interval
    per_node: dict[str, Interval] = field(default_factory=dict)

    @property
    def lo(self) -> float:
        return self.interval.lo

    @property
    def hi(self) -> float:
        return self.interval.hi

    @property
    def width(self) -> float:
        return self.interval.width

    def to_dict(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "width": self.width,
            "per_node": {p: iv.as_list() for p, iv in self.per_node.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "ErrorReport":
        return cls(Interval(d["lo"], d["hi"]), {p: Interval(*v) for p, v in d.get("per_node", {}).items()})


# ---------------------------------------------------------------- signal-dependent


def _reachable(f: Formula, T: int, t: int) -> dict[str, np.ndarray]:
    """Boolean masks of the time indices at which each node is evaluated from ``(s, t)``."""
    out = {}

    def walk(node, path, mask):
        out[path] = mask
        kids = node.children()
        if isinstance(node, (Eventually, Always, Until)):
            idx = np.flatnonzero(mask)
            nxt = np.zeros(T + 1, dtype=bool)
            for i in idx:
                nxt[i + node.t1 : i + node.t2 + 1] = True
            mask = nxt
        for i, c in enumerate(kids):
            walk(c, child_path(path, i), mask)

    start = np.zeros(T + 1, dtype=bool)
    start[t] = True
    walk(f, "/", start)
    return out


def _window_hull(lo, hi, t1, t2, n):
    return windows(lo, t1, t2, n).min(axis=1), windows(hi, t1, t2, n).max(axis=1)


def error_interval(f: Formula, s, cfg: SmoothConfig, t: int = 0, trace: SmoothTrace | None = None) -> ErrorReport:
    """Interval containing ``robustness(f, s, t) - smooth_robustness(f, s, cfg, t)``.

    ``per_node`` holds, for every node, the hull of its intervals over the
    time indices the root evaluation actually visits.
    """
    if trace is None:
        trace = smooth_trace(f, s, cfg, t=t)
    S = trace.samples
    srm = cfg.srm
    lows, highs = {}, {}

    for rec in trace.postorder():
        node, path = rec.node, rec.path
        n = len(rec.values)
        if isinstance(node, Pred) or isinstance(node, Not):
            pred = node.pred if isinstance(node, Pred) else node.child.pred
            if cfg.noise_enabled:
                nlo, nhi = pred.noise_bounds(S)
            else:
                nlo = nhi = np.zeros(S.shape[0])
            # rho - rho_smooth = -w for a predicate, +w for its negation.
            lo, hi = (-nhi, -nlo) if isinstance(node, Pred) else (nlo, nhi)
        elif isinstance(node, (And, Or)):
            kind, k = (srm.min_kind, rec.k1) if isinstance(node, And) else (srm.max_kind, rec.k2)
            blo, bhi = tight_band(kind, rec.inputs, k)
            kids = [child_path(path, i) for i in range(len(node.args))]
            lo = blo + np.min([lows[c][:n] for c in kids], axis=0)
            hi = bhi + np.max([highs[c][:n] for c in kids], axis=0)
        elif isinstance(node, (Eventually, Always)):
            kind, k = (srm.max_kind, rec.k2) if isinstance(node, Eventually) else (srm.min_kind, rec.k1)
            blo, bhi = tight_band(kind, rec.inputs, k)
            c = child_path(path, 0)
            clo, chi = _window_hull(lows[c], highs[c], node.t1, node.t2, n)
            lo, hi = blo + clo, bhi + chi
        elif isinstance(node, Until):
            lo, hi = _until_interval(node, rec, n, srm, lows, highs)
        else:
            raise TypeError(f"not a formula node: {node!r}")
        lows[path], highs[path] = lo, hi

    masks = _reachable(f, S.shape[0] - 1, t)
    per_node = {}
    for path, _ in iter_nodes(f):
        m = masks[path][: len(lows[path])]
        per_node[path] = Interval(lows[path][m].min(), highs[path][m].max())
    root = Interval(lows["/"][t], highs["/"][t])
    per_node["/"] = root
    return ErrorReport(root, per_node)


def _until_interval(node, rec, n, srm, lows, highs):
    k1, k2 = rec.k1, rec.k2
    W = node.t2 - node.t1 + 1
    lp, rp = child_path(rec.path, 0), child_path(rec.path, 1)
    llo, lhi = (windows(a, node.t1, node.t2, n) for a in (lows[lp], highs[lp]))
    rlo, rhi = (windows(a, node.t1, node.t2, n) for a in (lows[rp], highs[rp]))
    # Running smooth-min over the right operand, one prefix length per column.
    run_lo = np.minimum.accumulate(rlo, axis=1)
    run_hi = np.maximum.accumulate(rhi, axis=1)
    lo3, hi3 = np.empty((n, W)), np.empty((n, W))
    for j in range(W):
        blo, bhi = tight_band(srm.min_kind, rec.right_windows[:, : j + 1], k1)
        lo3[:, j], hi3[:, j] = blo + run_lo[:, j], bhi + run_hi[:, j]
    # Pairwise smooth-min of the left operand with the running minimum.
    blo, bhi = tight_band(srm.min_kind, rec.pair_in, k1)
    lo4, hi4 = blo + np.minimum(llo, lo3), bhi + np.maximum(lhi, hi3)
    blo, bhi = tight_band(srm.max_kind, rec.inputs, k2)
    return blo + lo4.min(axis=1), bhi + hi4.max(axis=1)


# ---------------------------------------------------------------- signal-free


class SampleDependentNoiseError(ValueError):
    pass


def error_interval_signal_free(
    f: Formula,
    cfg: SmoothConfig,
    range_bound: float | None = None,
    *,
    operator_bands: bool = True,
) -> ErrorReport:
    """Signal-independent interval containing ``exact - smooth`` for any signal.

    ``range_bound`` must dominate the spread of the smoothed operands at every
    Soft operator (not needed for SRM1). With ``operator_bands=False`` every
    operator band is zero, which leaves only the effect of predicate noise on
    an exactly evaluated robustness.
    """
    srm = cfg.srm
    per_node: dict[str, Interval] = {}

    def band(kind, m, k):
        if not operator_bands:
            return Interval(0.0, 0.0)
        return value_free_band(kind, m, k, range_bound)

    def walk(node, path) -> Interval:
        if isinstance(node, (Pred, Not)):
            if isinstance(node, Not) and not isinstance(node.child, Pred):
                raise ValueError("signal-free bounds require negation normal form")
            pred = node.pred if isinstance(node, Pred) else node.child.pred
            if not pred.has_constant_noise:
                raise SampleDependentNoiseError(
                    f"predicate {pred.name!r} has sample-dependent noise; use error_interval with a signal"
                )
            nlo, nhi = (pred.noise_lo, pred.noise_hi) if cfg.noise_enabled else (0.0, 0.0)
            iv = Interval(-nhi, -nlo) if isinstance(node, Pred) else Interval(nlo, nhi)
            if isinstance(node, Not):
                per_node[child_path(path, 0)] = Interval(-nhi, -nlo)
        else:
            k1, k2 = cfg.params(path, node)
            kids = [walk(c, child_path(path, i)) for i, c in enumerate(node.children())]
            if isinstance(node, (And, Or)):
                b = band(srm.min_kind, len(kids), k1) if isinstance(node, And) else band(srm.max_kind, len(kids), k2)
                iv = b + Interval(min(c.lo for c in kids), max(c.hi for c in kids))
            elif isinstance(node, Eventually):
                iv = band(srm.max_kind, node.t2 - node.t1 + 1, k2) + kids[0]
            elif isinstance(node, Always):
                iv = band(srm.min_kind, node.t2 - node.t1 + 1, k1) + kids[0]
            elif isinstance(node, Until):
                left, right = kids
                W = node.t2 - node.t1 + 1
                lo4, hi4 = np.inf, -np.inf
                for j in range(W):
                    iv3 = band(srm.min_kind, j + 1, k1) + right
                    iv4 = band(srm.min_kind, 2, k1) + Interval(min(left.lo, iv3.lo), max(left.hi, iv3.hi))
                    lo4, hi4 = min(lo4, iv4.lo), max(hi4, iv4.hi)
                iv = band(srm.max_kind, W, k2) + Interval(lo4, hi4)
            else:
                raise TypeError(f"not a formula node: {node!r}")
        per_node[path] = iv
        return iv

    root = walk(f, "/")
    return ErrorReport(root, per_node)


def accuracy_bound(f: Formula, cfg: SmoothConfig) -> ErrorReport:
    """Interval for ``true - estimated`` exact robustness when only noise is present."""
    return error_interval_signal_free(f, cfg, None, operator_bands=False)


# ---------------------------------------------------------------- certification


def certify(smooth_value: float, report: ErrorReport) -> Interval:
    """Interval guaranteed to contain the exact robustness."""
    return Interval(smooth_value + report.lo, smooth_value + report.hi)


def termination_threshold(target: float, report: ErrorReport) -> float:
    """Smooth value at or above which the exact robustness provably exceeds ``target``."""
    return target - report.lo
