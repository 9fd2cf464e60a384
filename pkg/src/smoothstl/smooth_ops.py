"""Smooth min/max operators, their gradients and approximation-error bands.

All routines reduce over the last axis, so a matrix of shape ``(n, m)`` is
treated as ``n`` independent sets of ``m`` values. Exponent sums are taken
after subtracting the extremal exponent, so no intermediate overflows.

Band conventions: a band ``[lo, hi]`` always bounds ``exact - smooth`` where
``exact`` is the true min (or max) of the operands.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class OpKind(enum.Enum):
    QUASI_MIN = "QuasiMin"
    QUASI_MAX = "QuasiMax"
    SOFT_MIN = "SoftMin"
    SOFT_MAX = "SoftMax"

    @property
    def is_min(self) -> bool:
        return self in (OpKind.QUASI_MIN, OpKind.SOFT_MIN)

    @property
    def is_quasi(self) -> bool:
        return self in (OpKind.QUASI_MIN, OpKind.QUASI_MAX)


class BandMode(enum.Enum):
    TIGHT = "tight"
    VALUE_FREE = "value_free"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo <= hi:
            raise ValueError(f"interval lower end {lo} exceeds upper end {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def issubset(self, other: "Interval", slack: float = 0.0) -> bool:
        return other.lo - slack <= self.lo and self.hi <= other.hi + slack

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def as_list(self):
        return [self.lo, self.hi]

    def __iter__(self):
        yield self.lo
        yield self.hi


def _check(a, k):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise ValueError("smooth operators need a non-empty operand set")
    if not np.all(np.isfinite(a)):
        raise ValueError("smooth operator operands must be finite")
    if not (np.isscalar(k) or np.ndim(k) == 0) or not k > 0:
        raise ValueError(f"smoothing parameter must be a positive scalar, got {k!r}")
    return a, float(k)


def reduce(kind: OpKind, a, k: float, grad: bool = False):
    """Apply ``kind`` over the last axis of ``a``; optionally also return weights.

    Returns ``value`` (shape ``a.shape[:-1]``) or ``(value, dvalue/da)`` with
    the gradient shaped like ``a``.
    """
    a = np.asarray(a, dtype=float)
    sign = -1.0 if kind.is_min else 1.0
    ext = a.min(axis=-1, keepdims=True) if kind.is_min else a.max(axis=-1, keepdims=True)
    e = np.exp(sign * k * (a - ext))
    tot = e.sum(axis=-1, keepdims=True)
    w = e / tot
    if kind.is_quasi:
        # ext -/+ log(tot)/k; tot >= 1 keeps quasi-min <= min and quasi-max >= max exactly.
        val = ext[..., 0] + sign * np.log(tot[..., 0]) / k
        g = w
    else:
        val = np.sum(w * a, axis=-1)
        # A weighted average lies within [min, max]; clipping removes rounding excursions.
        val = np.clip(val, a.min(axis=-1), a.max(axis=-1))
        if grad:
            g = w * (1.0 + sign * k * (a - val[..., None]))
    if grad:
        return val, g
    return val


def smooth_op(kind: OpKind, a, k: float) -> float:
    a, k = _check(a, k)
    return float(reduce(kind, a, k)) if a.ndim == 1 else reduce(kind, a, k)


def smooth_op_grad(kind: OpKind, a, k: float) -> np.ndarray:
    a, k = _check(a, k)
    return reduce(kind, a, k, grad=True)[1]


def tight_band(kind: OpKind, a, k: float) -> tuple[np.ndarray, np.ndarray]:
    """Data-dependent band of ``exact - smooth`` for each row of ``a``."""
    a = np.asarray(a, dtype=float)
    m = a.shape[-1]
    zero = np.zeros(a.shape[:-1])
    if m == 1:
        return zero, zero.copy()
    srt = np.sort(a, axis=-1)
    lo_v, lo2, hi_v, hi2 = srt[..., 0], srt[..., 1], srt[..., -1], srt[..., -2]
    if kind is OpKind.QUASI_MIN:
        return zero, np.log1p((m - 1) * np.exp(-k * (lo2 - lo_v))) / k
    if kind is OpKind.QUASI_MAX:
        return -np.log1p((m - 1) * np.exp(-k * (hi_v - hi2))) / k, zero
    spread = hi_v - lo_v
    if kind is OpKind.SOFT_MIN:
        tot = np.exp(-k * (a - lo_v[..., None])).sum(axis=-1)
        return -spread * (1.0 - 1.0 / tot), zero
    tot = np.exp(-k * (hi_v[..., None] - a)).sum(axis=-1)
    return zero, spread * (1.0 - 1.0 / tot)


def value_free_band(kind: OpKind, m: int, k: float, range_bound: float | None = None, gap: float = 0.0) -> Interval:
    """Band that depends only on the operand count (and, for Soft kinds, on bounds).

    ``range_bound`` must dominate the operand spread ``max - min``; ``gap`` must
    not exceed the gap between the two extreme operands (0 is always safe).
    """
    if m < 1:
        raise ValueError("operand count must be positive")
    if not k > 0:
        raise ValueError(f"smoothing parameter must be positive, got {k!r}")
    if kind.is_quasi:
        w = np.log(m) / k
        return Interval(0.0, w) if kind is OpKind.QUASI_MIN else Interval(-w, 0.0)
    if range_bound is None:
        raise ValueError("value-free Soft bands need a range bound on the operands")
    if range_bound < 0 or gap < 0:
        raise ValueError("range and gap bounds must be non-negative")
    if m == 1:
        return Interval(0.0, 0.0)
    w = range_bound / (1.0 + np.exp(k * gap) / (m - 1))
    return Interval(-w, 0.0) if kind is OpKind.SOFT_MIN else Interval(0.0, w)


def op_error_band(
    kind: OpKind,
    a,
    k: float,
    mode: BandMode | str = BandMode.TIGHT,
    *,
    range_bound: float | None = None,
    gap: float = 0.0,
) -> Interval:
    """Interval guaranteed to contain ``exact(a) - smooth(a)`` for a 1-D operand set."""
    a, k = _check(a, k)
    mode = BandMode(mode)
    if mode is BandMode.TIGHT:
        lo, hi = tight_band(kind, a, k)
        return Interval(float(lo), float(hi))
    return value_free_band(kind, a.shape[-1], k, range_bound, gap)
