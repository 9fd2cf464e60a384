"""Exact (non-smooth) robust semantics and the composite signal container."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .formula import (
    Always,
    And,
    Eventually,
    Formula,
    Not,
    Or,
    Pred,
    Until,
    horizon,
)


class HorizonError(ValueError):
    pass


@dataclass(frozen=True)
class Signal:
    """Samples ``s_t = [y_t; x_t; u_t]`` for ``t = 0..T``, stored as a ``(T+1, q)`` array."""

    samples: np.ndarray
    dims: tuple[int, int, int] | None = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("signal samples must be a non-empty (T+1, q) array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.dims is not None:
            p, n, m = self.dims
            if p + n + m != s.shape[1]:
                raise ValueError(f"dims {self.dims} do not add up to q={s.shape[1]}")

    @property
    def T(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def q(self) -> int:
        return self.samples.shape[1]

    def _block(self, i):
        if self.dims is None:
            raise ValueError("signal has no (p, n, m) layout")
        p, n, _ = self.dims
        bounds = [0, p, p + n, self.q]
        return self.samples[:, bounds[i] : bounds[i + 1]]

    @property
    def y(self):
        return self._block(0)

    @property
    def x(self):
        return self._block(1)

    @property
    def u(self):
        return self._block(2)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"s{i}" for i in range(self.q)])
        for t, row in enumerate(self.samples):
            w.writerow([t] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, dims=None) -> "Signal":
        """Read the ``t,s0,...,s{q-1}`` CSV layout; ``source`` is a path or text."""
        if "\n" in str(source) or "," in str(source):
            text = str(source)
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[0].strip() != "t":
            raise ValueError("signal CSV must start with a 't' column")
        expect = [f"s{i}" for i in range(len(header) - 1)]
        if [h.strip() for h in header[1:]] != expect:
            raise ValueError(f"signal CSV header must be t,{','.join(expect)}")
        ts = [int(r[0]) for r in body]
        if ts != list(range(len(body))):
            raise ValueError("signal CSV rows must have ascending t = 0, 1, 2, ... without gaps")
        return cls(np.array([[float(v) for v in r[1:]] for r in body]), dims)


def as_signal(s) -> Signal:
    return s if isinstance(s, Signal) else Signal(s)


def check_horizon(f: Formula, s: Signal, t: int = 0) -> int:
    h = horizon(f)
    if t < 0 or t + h > s.T:
        raise HorizonError(
            f"formula needs {h} steps after t={t} but the signal ends at T={s.T}"
        )
    return h


def windows(values: np.ndarray, t1: int, t2: int, n: int) -> np.ndarray:
    """Rows ``values[t+t1 : t+t2+1]`` for ``t = 0..n-1`` as an ``(n, t2-t1+1)`` view."""
    return sliding_window_view(values, t2 - t1 + 1)[t1 : t1 + n]


def _exact(f: Formula, S: np.ndarray) -> np.ndarray:
    # Values for t = 0..T-horizon(f); every node is computed once per call.
    n = S.shape[0] - horizon(f)
    if isinstance(f, Pred):
        return f.pred.value(S)
    if isinstance(f, Not):
        return -_exact(f.child, S)
    if isinstance(f, (And, Or)):
        M = np.stack([_exact(c, S)[:n] for c in f.args], axis=1)
        return M.min(axis=1) if isinstance(f, And) else M.max(axis=1)
    if isinstance(f, (Eventually, Always)):
        W = windows(_exact(f.child, S), f.t1, f.t2, n)
        return W.max(axis=1) if isinstance(f, Eventually) else W.min(axis=1)
    if isinstance(f, Until):
        left = windows(_exact(f.left, S), f.t1, f.t2, n)
        right = windows(_exact(f.right, S), f.t1, f.t2, n)
        running = np.minimum.accumulate(right, axis=1)
        return np.minimum(left, running).max(axis=1)
    raise TypeError(f"not a formula node: {f!r}")


def robustness(f: Formula, s, t: int = 0) -> float:
    """Exact robustness of ``f`` on the suffix of ``s`` starting at ``t``."""
    s = as_signal(s)
    check_horizon(f, s, t)
    return float(_exact(f, s.samples)[t])


def robustness_trace(f: Formula, s) -> np.ndarray:
    """Exact robustness at every time index where ``f`` can be evaluated."""
    s = as_signal(s)
    check_horizon(f, s, 0)
    return _exact(f, s.samples)


def robustness_reference(f: Formula, s, t: int = 0) -> float:
    """Direct transcription of the recursive definition, without sharing.

    Exponential in nesting depth; meant as a test oracle for small inputs.
    """
    s = as_signal(s)
    check_horizon(f, s, t)
    return _ref(f, s.samples, t)


def _ref(f, S, t):
    if isinstance(f, Pred):
        return float(f.pred.value(S[t]))
    if isinstance(f, Not):
        return -_ref(f.child, S, t)
    if isinstance(f, And):
        return min(_ref(c, S, t) for c in f.args)
    if isinstance(f, Or):
        return max(_ref(c, S, t) for c in f.args)
    if isinstance(f, Eventually):
        return max(_ref(f.child, S, tau) for tau in range(t + f.t1, t + f.t2 + 1))
    if isinstance(f, Always):
        return min(_ref(f.child, S, tau) for tau in range(t + f.t1, t + f.t2 + 1))
    if isinstance(f, Until):
        best = -np.inf
        for tau in range(t + f.t1, t + f.t2 + 1):
            inner = min(_ref(f.right, S, d) for d in range(t + f.t1, tau + 1))
            best = max(best, min(_ref(f.left, S, tau), inner))
        return best
    raise TypeError(f"not a formula node: {f!r}")


class Verdict(enum.Enum):
    SAT = "Sat"
    UNSAT = "Unsat"
    BOUNDARY = "Boundary"


def verdict(rho: float) -> Verdict:
    if rho > 0:
        return Verdict.SAT
    if rho < 0:
        return Verdict.UNSAT
    return Verdict.BOUNDARY


def satisfies(f: Formula, s) -> Verdict:
    return verdict(robustness(f, s, 0))
