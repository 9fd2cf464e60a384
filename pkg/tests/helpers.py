"""Independent oracles shared by several test modules."""

import numpy as np

from smoothstl.formula import Always, And, Eventually, Not, Or, Pred, Predicate, Until, child_path, horizon, predicates
from smoothstl.testing import random_formula, random_predicates

SRMS = {
    "SRM1": ("qmin", "qmax"),
    "SRM2": ("qmin", "smax"),
    "SRM3": ("smin", "qmax"),
    "SRM4": ("smin", "smax"),
}


def naive_op(name, a, k):
    """Textbook smooth operators without stabilisation (valid for moderate k*a)."""
    a = np.asarray(a, dtype=float)
    if name == "qmin":
        return -np.log(np.sum(np.exp(-k * a))) / k
    if name == "qmax":
        return np.log(np.sum(np.exp(k * a))) / k
    if name == "smin":
        w = np.exp(-k * a)
        return float(np.sum(a * w) / np.sum(w))
    w = np.exp(k * a)
    return float(np.sum(a * w) / np.sum(w))


def smooth_reference(f, S, srm, k1, k2, t=0, path="/", overrides=None):
    """Direct recursive transcription of the smooth semantics, one time index at a time."""
    mn, mx = SRMS[srm]
    if overrides and path in overrides:
        k1, k2 = overrides[path]
    elif getattr(f, "k", None) is not None:
        k1, k2 = f.k
    rec = lambda g, tt, i: smooth_reference(g, S, srm, k1, k2, tt, child_path(path, i), overrides)
    if isinstance(f, Pred):
        return float(f.pred.value(S[t]))
    if isinstance(f, Not):
        return -rec(f.child, t, 0)
    if isinstance(f, And):
        return naive_op(mn, [rec(c, t, i) for i, c in enumerate(f.args)], k1)
    if isinstance(f, Or):
        return naive_op(mx, [rec(c, t, i) for i, c in enumerate(f.args)], k2)
    if isinstance(f, Eventually):
        return naive_op(mx, [rec(f.child, tau, 0) for tau in range(t + f.t1, t + f.t2 + 1)], k2)
    if isinstance(f, Always):
        return naive_op(mn, [rec(f.child, tau, 0) for tau in range(t + f.t1, t + f.t2 + 1)], k1)
    if isinstance(f, Until):
        outer = []
        for tau in range(t + f.t1, t + f.t2 + 1):
            run = naive_op(mn, [rec(f.right, d, 1) for d in range(t + f.t1, tau + 1)], k1)
            outer.append(naive_op(mn, [rec(f.left, tau, 0), run], k1))
        return naive_op(mx, outer, k2)
    raise TypeError(f)


def random_case(seed, depth=3, max_window=3, noise=0.0, q=2, extra=3, until=True):
    rng = np.random.default_rng(seed)
    preds = random_predicates(rng, q, 3, noise)
    f = random_formula(rng, preds, depth=depth, max_window=max_window, until=until)
    s = rng.normal(size=(horizon(f) + 1 + int(rng.integers(0, extra + 1)), q))
    return rng, preds, f, s


def with_noise_realisation(f, rng):
    """Same formula with each predicate shifted by a fixed draw inside its noise bounds."""
    shift = {}
    for p in predicates(f):
        shift[p.name] = rng.uniform(p.noise_lo, p.noise_hi) if p.noise_hi > p.noise_lo else p.noise_lo

    def go(g):
        if isinstance(g, Pred):
            p = g.pred
            return Pred(Predicate.affine(p.name, p.mu.c, p.mu.b + shift[p.name]))
        if isinstance(g, Not):
            return Not(go(g.child))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(c) for c in g.args), g.k)
        if isinstance(g, (Eventually, Always)):
            return type(g)(g.t1, g.t2, go(g.child), g.k)
        return Until(g.t1, g.t2, go(g.left), go(g.right), g.k)

    return go(f)
