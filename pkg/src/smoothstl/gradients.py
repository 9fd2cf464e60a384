"""Exact gradients of smooth robustness.

``grad_wrt_signal`` runs one reverse sweep over a recorded forward pass: every
node receives an adjoint per time index (the sum over paths of products of
operator weights), and predicate leaves scatter ``adjoint * dmu/ds`` into the
sample rows they read. ``grad_wrt_controls`` then pulls that signal gradient
back through the dynamics, either with a backward costate recursion (default)
or by multiplying with the dense signal Jacobian.

Predicate noise is exogenous and contributes no gradient.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .dynamics import System, as_controls, rollout
from .formula import Always, And, Eventually, Formula, Not, Or, Pred, Until, child_path
from .semantics import as_signal, check_horizon
from .smooth_semantics import SmoothConfig, SmoothTrace


def _backprop(trace: SmoothTrace, t: int) -> np.ndarray:
    S = trace.samples
    out = np.zeros_like(S)
    adj = {"/": np.zeros(len(trace.root.values))}
    adj["/"][t] = 1.0

    def add(path, n_child, seg_start, vals):
        a = adj.get(path)
        if a is None:
            a = adj[path] = np.zeros(n_child)
        a[seg_start : seg_start + len(vals)] += vals

    # Reversed postorder visits every parent before any of its descendants.
    for rec in reversed(trace.postorder()):
        node, path = rec.node, rec.path
        a = adj.pop(path, None)
        if a is None or not np.any(a):
            continue
        if isinstance(node, Pred):
            out[: len(a)] += a[:, None] * node.pred.gradient(S[: len(a)])
            continue
        kids = node.children()
        nk = [len(trace.records[child_path(path, i)].values) for i in range(len(kids))]
        n = len(a)
        if isinstance(node, Not):
            add(child_path(path, 0), nk[0], 0, -a)
        elif isinstance(node, (And, Or)):
            for i in range(len(kids)):
                add(child_path(path, i), nk[i], 0, a * rec.weights[:, i])
        elif isinstance(node, (Eventually, Always)):
            contrib = a[:, None] * rec.weights
            cp = child_path(path, 0)
            for j in range(contrib.shape[1]):
                add(cp, nk[0], node.t1 + j, contrib[:, j])
        elif isinstance(node, Until):
            d_pair = a[:, None] * rec.weights
            d_left = d_pair * rec.pair_weights[..., 0]
            d_prefix = d_pair * rec.pair_weights[..., 1]
            W = d_pair.shape[1]
            d_right = np.zeros((n, W))
            for j in range(W):
                d_right[:, : j + 1] += d_prefix[:, j : j + 1] * rec.prefix_weights[j]
            lp, rp = child_path(path, 0), child_path(path, 1)
            for j in range(W):
                add(lp, nk[0], node.t1 + j, d_left[:, j])
                add(rp, nk[1], node.t1 + j, d_right[:, j])
        else:
            raise TypeError(f"not a formula node: {node!r}")
    return out


def value_and_grad_signal(f: Formula, s, cfg: SmoothConfig, t: int = 0) -> tuple[float, np.ndarray]:
    """Smooth robustness at ``(s, t)`` and its gradient as a ``(T+1, q)`` array."""
    s = as_signal(s)
    check_horizon(f, s, t)
    trace = SmoothTrace(f, s.samples, cfg, grad=True)
    return float(trace.root.values[t]), _backprop(trace, t)


def grad_wrt_signal(f: Formula, s, cfg: SmoothConfig, t: int = 0) -> np.ndarray:
    """Gradient of the smooth robustness w.r.t. the flattened signal, length ``(T+1) q``.

    Entries for samples before ``t`` are exactly zero.
    """
    return value_and_grad_signal(f, s, cfg, t)[1].ravel()


def signal_jacobian(sys: System, u, x0) -> np.ndarray:
    """Dense ``d s / d u`` of shape ``((T+1) q, (T+1) m)``.

    Block ``(t, tau)`` stacks ``dy_t/du_tau``, ``dx_t/du_tau`` and
    ``[t == tau] * I_m``. State sensitivities follow the forward recursion
    ``S_{t+1} = A_t S_t + [t == tau] B_t``.
    """
    u = as_controls(u, sys)
    sig = rollout(sys, u, x0)
    X = sig.x
    N, (p, n, m), q = u.shape[0], sys.dims, sys.q
    J = np.zeros((N * q, N * m))
    sens = np.zeros((n, N * m))  # dx_t / du, all tau at once
    for t in range(N):
        gx, gu = sys.jac_g_x(X[t], u[t]), sys.jac_g_u(X[t], u[t])
        rows = slice(t * q, (t + 1) * q)
        blk = J[rows]
        blk[:p] = gx @ sens
        blk[:p, t * m : (t + 1) * m] += gu
        blk[p : p + n] = sens
        blk[p + n :, t * m : (t + 1) * m] = np.eye(m)
        if t + 1 < N:
            sens = sys.jac_f_x(X[t], u[t]) @ sens
            sens[:, t * m : (t + 1) * m] += sys.jac_f_u(X[t], u[t])
    return J


def pullback_controls(sys: System, sig, u, grad_s: np.ndarray) -> np.ndarray:
    """Pull a ``(T+1, q)`` signal gradient back to a ``(T+1, m)`` control gradient.

    Costate recursion: ``lam_t = gy_t Cx_t + gx_t + lam_{t+1} A_t``, then
    ``dJ/du_t = gu_t + gy_t Du_t + lam_{t+1} B_t``.
    """
    p, n, m = sys.dims
    X = sig.x
    N = u.shape[0]
    gy, gx, gu = grad_s[:, :p], grad_s[:, p : p + n], grad_s[:, p + n :]
    out = np.empty((N, m))
    lam_next = np.zeros(n)
    for t in range(N - 1, -1, -1):
        out[t] = gu[t] + gy[t] @ sys.jac_g_u(X[t], u[t])
        if t + 1 < N:
            out[t] += lam_next @ sys.jac_f_u(X[t], u[t])
            lam = gy[t] @ sys.jac_g_x(X[t], u[t]) + gx[t] + lam_next @ sys.jac_f_x(X[t], u[t])
        else:
            lam = gy[t] @ sys.jac_g_x(X[t], u[t]) + gx[t]
        lam_next = lam
    return out


def value_and_grad_controls(f: Formula, sys: System, u, x0, cfg: SmoothConfig):
    """``(smooth value, (T+1, m) gradient, signal)`` via the costate recursion."""
    u = as_controls(u, sys)
    sig = rollout(sys, u, x0)
    val, gs = value_and_grad_signal(f, sig, cfg)
    return val, pullback_controls(sys, sig, u, gs), sig


def grad_wrt_controls(f: Formula, sys: System, u, x0, cfg: SmoothConfig, method: str = "adjoint") -> np.ndarray:
    """``d smooth_robustness(rollout(u)) / du`` flattened to length ``(T+1) m``."""
    u = as_controls(u, sys)
    if method == "adjoint":
        return value_and_grad_controls(f, sys, u, x0, cfg)[1].ravel()
    if method == "dense":
        gs = grad_wrt_signal(f, rollout(sys, u, x0), cfg)
        return gs @ signal_jacobian(sys, u, x0)
    raise ValueError(f"unknown method {method!r}; use 'adjoint' or 'dense'")


def finite_diff_grad(objective: Callable[[np.ndarray], float], point, step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar objective, one coordinate at a time."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.array(point, dtype=float)
    shape = x.shape
    x = x.ravel()
    g = np.empty_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + step
        fp = objective(x.reshape(shape))
        x[i] = old - step
        fm = objective(x.reshape(shape))
        x[i] = old
        g[i] = (fp - fm) / (2 * step)
    return g.reshape(shape)


def relative_error(g, ref, floor: float = 1e-12) -> float:
    """``max|g - ref| / max(max|ref|, floor)``."""
    g, ref = np.ravel(g), np.ravel(ref)
    return float(np.max(np.abs(g - ref), initial=0.0) / max(np.max(np.abs(ref), initial=0.0), floor))
