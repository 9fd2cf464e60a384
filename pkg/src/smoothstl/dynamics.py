"""Discrete-time systems ``x_{t+1} = f(x_t, u_t)``, ``y_t = g(x_t, u_t)`` and rollout.

A rollout turns a control sequence ``u_0..u_T`` and an initial state into the
composite signal whose samples are ``[y_t; x_t; u_t]`` in that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .semantics import Signal


class System:
    """Interface for a discrete-time system with Jacobian evaluators.

    Subclasses implement ``f``, ``g`` and the four Jacobians. Evaluators must
    not mutate shared state, so one instance can serve concurrent rollouts.
    """

    n: int
    m: int
    p: int

    def f(self, x, u):
        raise NotImplementedError

    def g(self, x, u):
        raise NotImplementedError

    def jac_f_x(self, x, u):
        raise NotImplementedError

    def jac_f_u(self, x, u):
        raise NotImplementedError

    def jac_g_x(self, x, u):
        raise NotImplementedError

    def jac_g_u(self, x, u):
        raise NotImplementedError

    @property
    def q(self) -> int:
        return self.p + self.n + self.m

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.p, self.n, self.m

    def to_dict(self):
        raise NotImplementedError(f"{type(self).__name__} has no config form")


class LinearSystem(System):
    """``f = A x + B u``, ``g = C x + D u`` with constant Jacobians."""

    def __init__(self, A, B, C=None, D=None, kind: str = "linear", params: dict | None = None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {A.shape}")
        B = B.reshape(n, -1) if B.ndim < 2 else B
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        m = B.shape[1]
        C = np.eye(n) if C is None else np.atleast_2d(np.asarray(C, dtype=float))
        if C.shape[1] != n:
            raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
        p = C.shape[0]
        D = np.zeros((p, m)) if D is None else np.asarray(D, dtype=float).reshape(p, -1)
        if D.shape != (p, m):
            raise ValueError(f"D must have shape {(p, m)}, got {D.shape}")
        self.A, self.B, self.C, self.D = A, B, C, D
        self.n, self.m, self.p = n, m, p
        self._kind, self._params = kind, params

    def f(self, x, u):
        return self.A @ x + self.B @ u

    def g(self, x, u):
        return self.C @ x + self.D @ u

    def jac_f_x(self, x, u):
        return self.A

    def jac_f_u(self, x, u):
        return self.B

    def jac_g_x(self, x, u):
        return self.C

    def jac_g_u(self, x, u):
        return self.D

    def to_dict(self):
        if self._params is not None:
            return {"type": self._kind, **self._params}
        return {"type": "linear", "A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist(), "D": self.D.tolist()}

    def __repr__(self):
        return f"LinearSystem(n={self.n}, m={self.m}, p={self.p})"


@dataclass
class FunctionSystem(System):
    """System assembled from plain callables (for nonlinear models)."""

    n: int
    m: int
    p: int
    f_fn: Callable
    g_fn: Callable
    fx: Callable
    fu: Callable
    gx: Callable
    gu: Callable

    def f(self, x, u):
        return np.asarray(self.f_fn(x, u), dtype=float)

    def g(self, x, u):
        return np.asarray(self.g_fn(x, u), dtype=float)

    def jac_f_x(self, x, u):
        return np.asarray(self.fx(x, u), dtype=float)

    def jac_f_u(self, x, u):
        return np.asarray(self.fu(x, u), dtype=float)

    def jac_g_x(self, x, u):
        return np.asarray(self.gx(x, u), dtype=float)

    def jac_g_u(self, x, u):
        return np.asarray(self.gu(x, u), dtype=float)


def linear_system(A, B, C=None, D=None) -> LinearSystem:
    return LinearSystem(A, B, C, D)


def single_integrator_2d(dt: float = 1.0) -> LinearSystem:
    """Velocity-controlled point in the plane; the output is the position."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return LinearSystem(np.eye(2), dt * np.eye(2), kind="single_integrator_2d", params={"dt": float(dt)})


def double_integrator_2d(dt: float = 1.0) -> LinearSystem:
    """State ``(px, py, vx, vy)``, acceleration input, position output."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    I = np.eye(2)
    A = np.block([[I, dt * I], [np.zeros((2, 2)), I]])
    B = np.vstack([0.5 * dt**2 * I, dt * I])
    C = np.hstack([I, np.zeros((2, 2))])
    return LinearSystem(A, B, C, kind="double_integrator_2d", params={"dt": float(dt)})


def system_from_dict(d) -> System:
    kind = d.get("type")
    if kind == "single_integrator_2d":
        return single_integrator_2d(d.get("dt", 1.0))
    if kind == "double_integrator_2d":
        return double_integrator_2d(d.get("dt", 1.0))
    if kind == "linear":
        return LinearSystem(d["A"], d["B"], d.get("C"), d.get("D"))
    raise ValueError(f"unknown system type {kind!r}")


def as_controls(u, sys: System) -> np.ndarray:
    """Reshape a flat or ``(T+1, m)`` control array to ``(T+1, m)``."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        if u.size % sys.m:
            raise ValueError(f"{u.size} control values do not split into m={sys.m} channels")
        u = u.reshape(-1, sys.m)
    if u.ndim != 2 or u.shape[1] != sys.m:
        raise ValueError(f"controls must have shape (T+1, {sys.m}), got {u.shape}")
    return u


def states(sys: System, u, x0) -> np.ndarray:
    """States ``x_0..x_T`` driven by ``u_0..u_{T-1}`` (``u_T`` only affects ``y_T``)."""
    u = as_controls(u, sys)
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 must have length n={sys.n}, got {x0.size}")
    X = np.empty((u.shape[0], sys.n))
    X[0] = x0
    for t in range(u.shape[0] - 1):
        X[t + 1] = sys.f(X[t], u[t])
    if not np.all(np.isfinite(X)):
        raise FloatingPointError("rollout produced a non-finite state")
    return X


def rollout(sys: System, u, x0) -> Signal:
    """Composite signal ``s_t = [y_t; x_t; u_t]`` for ``t = 0..T``."""
    u = as_controls(u, sys)
    X = states(sys, u, x0)
    Y = np.array([sys.g(X[t], u[t]) for t in range(u.shape[0])]).reshape(u.shape[0], sys.p)
    return Signal(np.hstack([Y, X, u]), sys.dims)
