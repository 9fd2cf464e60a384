"""Random formulas, signals and systems for property tests and gradient checks."""

from __future__ import annotations

import numpy as np

from .dynamics import LinearSystem
from .formula import Always, And, Eventually, Formula, Not, Or, Pred, Predicate, Until

BINARY_OPS = ("and", "or", "until")
UNARY_OPS = ("eventually", "always")


def random_predicates(rng: np.random.Generator, q: int, count: int = 3, noise: float = 0.0) -> list[Predicate]:
    preds = []
    for i in range(count):
        c = rng.normal(size=q)
        preds.append(Predicate.affine(f"p{i}", c, rng.normal(scale=0.5), (-noise, noise)))
    return preds


def random_formula(
    rng: np.random.Generator,
    preds: list[Predicate],
    depth: int = 3,
    max_window: int = 4,
    until: bool = True,
    max_args: int = 3,
) -> Formula:
    """Random NNF formula of nesting depth at most ``depth``.

    Leaves are predicates or their negations; temporal windows have width
    at most ``max_window + 1``.
    """
    if depth <= 0 or rng.random() < 0.2:
        leaf = Pred(preds[rng.integers(len(preds))])
        return Not(leaf) if rng.random() < 0.3 else leaf
    ops = ["and", "or", "eventually", "always"] + (["until"] if until else [])
    op = ops[rng.integers(len(ops))]
    sub = lambda: random_formula(rng, preds, depth - 1, max_window, until, max_args)
    t1 = int(rng.integers(0, 3))
    t2 = t1 + int(rng.integers(0, max_window + 1))
    if op == "and" or op == "or":
        args = tuple(sub() for _ in range(int(rng.integers(2, max_args + 1))))
        return And(args) if op == "and" else Or(args)
    if op == "eventually":
        return Eventually(t1, t2, sub())
    if op == "always":
        return Always(t1, t2, sub())
    return Until(t1, t2, sub(), sub())


def random_signal(rng: np.random.Generator, length: int, q: int, scale: float = 1.0) -> np.ndarray:
    return rng.normal(scale=scale, size=(length, q))


def random_linear_system(rng: np.random.Generator, n: int = 2, m: int = 2, p: int = 2, feedthrough: bool = True) -> LinearSystem:
    """Random linear system with spectral radius at most 1 (keeps long rollouts bounded)."""
    A = rng.normal(size=(n, n))
    rad = max(np.abs(np.linalg.eigvals(A)).max(), 1e-12)
    A = A * (rng.uniform(0.5, 1.0) / rad)
    B = rng.normal(size=(n, m))
    C = rng.normal(size=(p, n))
    D = rng.normal(size=(p, m)) if feedthrough else np.zeros((p, m))
    return LinearSystem(A, B, C, D)
