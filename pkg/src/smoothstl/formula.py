"""STL formula trees, predicate tables and structural rewrites.

Formulas are immutable trees of frozen dataclasses. Every node is addressed
by its path from the root, written ``"/"`` for the root and ``"/0/2"`` for the
third child of the root's first child. Paths key the per-node smoothing
parameter overrides used by the smooth semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Union

import numpy as np

NoiseBound = Union[float, Callable[[np.ndarray], np.ndarray]]


def _const_or_call(v: NoiseBound, samples: np.ndarray) -> np.ndarray:
    if callable(v):
        return np.asarray(v(samples), dtype=float)
    return np.full(samples.shape[:-1], float(v))


@dataclass(frozen=True)
class AffineMap:
    """``mu(s) = c @ s + b``; picklable, vectorised over leading axes."""

    c: tuple
    b: float

    def __call__(self, samples):
        # Channel-by-channel accumulation rounds identically for any batch shape,
        # unlike a BLAS matmul.
        samples = np.asarray(samples, dtype=float)
        out = np.full(samples.shape[:-1], self.b)
        for i, ci in enumerate(self.c):
            if ci != 0.0:
                out = out + ci * samples[..., i]
        return out

    def grad(self, samples):
        samples = np.asarray(samples, dtype=float)
        return np.broadcast_to(np.asarray(self.c, dtype=float), samples.shape).copy()


@dataclass(frozen=True)
class Predicate:
    """A predicate ``mu(s_t) >= 0`` over composite samples.

    ``mu`` and ``mu_grad`` must accept arrays of shape ``(..., q)`` and return
    shapes ``(...)`` and ``(..., q)`` respectively. ``noise_lo``/``noise_hi``
    bound an additive disturbance on the predicate value; they are either
    constants or callables with the same signature as ``mu``.
    """

    name: str
    mu: Callable[[np.ndarray], np.ndarray]
    mu_grad: Callable[[np.ndarray], np.ndarray]
    noise_lo: NoiseBound = 0.0
    noise_hi: NoiseBound = 0.0
    q: int | None = None

    def __post_init__(self):
        if not callable(self.noise_lo) and not callable(self.noise_hi):
            if float(self.noise_lo) > float(self.noise_hi):
                raise ValueError(f"predicate {self.name!r}: noise_lo > noise_hi")

    @classmethod
    def affine(cls, name, c, b=0.0, noise=(0.0, 0.0)) -> "Predicate":
        c = tuple(float(v) for v in np.ravel(c))
        m = AffineMap(c, float(b))
        return cls(name, m, m.grad, float(noise[0]), float(noise[1]), q=len(c))

    def value(self, samples: np.ndarray) -> np.ndarray:
        return np.asarray(self.mu(samples), dtype=float)

    def gradient(self, samples: np.ndarray) -> np.ndarray:
        return np.asarray(self.mu_grad(samples), dtype=float)

    def noise_bounds(self, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lo = _const_or_call(self.noise_lo, samples)
        hi = _const_or_call(self.noise_hi, samples)
        if np.any(lo > hi):
            raise ValueError(f"predicate {self.name!r}: noise_lo > noise_hi on some sample")
        return lo, hi

    @property
    def has_constant_noise(self) -> bool:
        return not callable(self.noise_lo) and not callable(self.noise_hi)

    @property
    def is_noiseless(self) -> bool:
        return self.has_constant_noise and self.noise_lo == 0.0 and self.noise_hi == 0.0

    def with_noise(self, lo: NoiseBound, hi: NoiseBound) -> "Predicate":
        return Predicate(self.name, self.mu, self.mu_grad, lo, hi, self.q)


# ---------------------------------------------------------------- formula nodes


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    # Operator sugar for building formulas in code.
    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True, eq=True)
class Pred(Formula):
    pred: Predicate

    def __repr__(self):
        return f"Pred({self.pred.name})"


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


def _check_k(k):
    if k is not None:
        k1, k2 = k
        if not (k1 > 0 and k2 > 0):
            raise ValueError(f"smoothing parameters must be positive, got {k}")


@dataclass(frozen=True)
class And(Formula):
    args: tuple
    k: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise ValueError("And needs at least two operands")
        _check_k(self.k)

    def children(self):
        return self.args


@dataclass(frozen=True)
class Or(Formula):
    args: tuple
    k: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise ValueError("Or needs at least two operands")
        _check_k(self.k)

    def children(self):
        return self.args


def _check_interval(t1, t2):
    if int(t1) != t1 or int(t2) != t2:
        raise ValueError(f"interval bounds must be integers, got [{t1},{t2}]")
    if t1 < 0 or t2 < t1:
        raise ValueError(f"malformed interval [{t1},{t2}]: need 0 <= t1 <= t2")


@dataclass(frozen=True)
class Eventually(Formula):
    t1: int
    t2: int
    child: Formula
    k: tuple | None = None

    def __post_init__(self):
        _check_interval(self.t1, self.t2)
        _check_k(self.k)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Always(Formula):
    t1: int
    t2: int
    child: Formula
    k: tuple | None = None

    def __post_init__(self):
        _check_interval(self.t1, self.t2)
        _check_k(self.k)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Until(Formula):
    """``left U[t1,t2] right``.

    Robustness at ``t`` is the max over ``tau in [t+t1, t+t2]`` of
    ``min(rho_left(tau), min over delta in [t+t1, tau] of rho_right(delta))``:
    the left operand is read at ``tau`` and the right operand's running minimum
    is taken up to ``tau``. This is the opposite role assignment from the
    textbook Until and is kept deliberately.
    """

    t1: int
    t2: int
    left: Formula
    right: Formula
    k: tuple | None = None

    def __post_init__(self):
        _check_interval(self.t1, self.t2)
        _check_k(self.k)

    def children(self):
        return (self.left, self.right)


# ---------------------------------------------------------------- structure


def child_path(path: str, i: int) -> str:
    return f"{path}{i}" if path.endswith("/") else f"{path}/{i}"


def iter_nodes(f: Formula, path: str = "/") -> Iterator[tuple[str, Formula]]:
    """Pre-order walk yielding ``(path, node)``."""
    yield path, f
    for i, c in enumerate(f.children()):
        yield from iter_nodes(c, child_path(path, i))


def node_at(f: Formula, path: str) -> Formula:
    node = f
    for part in (p for p in path.split("/") if p):
        node = node.children()[int(part)]
    return node


def horizon(f: Formula) -> int:
    """Number of future steps needed to evaluate ``f`` at a time index."""
    if isinstance(f, Pred):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(c) for c in f.args)
    if isinstance(f, (Eventually, Always)):
        return f.t2 + horizon(f.child)
    if isinstance(f, Until):
        return f.t2 + max(horizon(f.left), horizon(f.right))
    raise TypeError(f"not a formula node: {f!r}")


def size(f: Formula) -> int:
    return sum(1 for _ in iter_nodes(f))


def predicates(f: Formula) -> list[Predicate]:
    seen = {}
    for _, n in iter_nodes(f):
        if isinstance(n, Pred):
            seen.setdefault(n.pred.name, n.pred)
    return list(seen.values())


def is_nnf(f: Formula) -> bool:
    return all(not isinstance(n, Not) or isinstance(n.child, Pred) for _, n in iter_nodes(f))


class NNFError(ValueError):
    pass


def to_nnf(f: Formula) -> Formula:
    """Push negations down to predicates.

    Negated Until has no dual in this logic and raises :class:`NNFError`.
    """
    return _nnf(f, negate=False)


def _nnf(f, negate):
    if isinstance(f, Pred):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return _nnf(f.child, not negate)
    if isinstance(f, And):
        args = tuple(_nnf(c, negate) for c in f.args)
        return Or(args, f.k) if negate else And(args, f.k)
    if isinstance(f, Or):
        args = tuple(_nnf(c, negate) for c in f.args)
        return And(args, f.k) if negate else Or(args, f.k)
    if isinstance(f, Eventually):
        c = _nnf(f.child, negate)
        return Always(f.t1, f.t2, c, f.k) if negate else Eventually(f.t1, f.t2, c, f.k)
    if isinstance(f, Always):
        c = _nnf(f.child, negate)
        return Eventually(f.t1, f.t2, c, f.k) if negate else Always(f.t1, f.t2, c, f.k)
    if isinstance(f, Until):
        if negate:
            raise NNFError("negation of Until cannot be pushed to predicates")
        return Until(f.t1, f.t2, _nnf(f.left, False), _nnf(f.right, False), f.k)
    raise TypeError(f"not a formula node: {f!r}")


def flatten(f: Formula) -> Formula:
    """Merge nested same-kind And/Or nodes into single n-ary nodes.

    Changes smooth values and error bands (operator arity changes), so it is
    never applied implicitly. A nested node is absorbed only when it carries
    no local parameter override of its own.
    """
    if isinstance(f, (And, Or)):
        kind = type(f)
        args = []
        for c in f.args:
            c = flatten(c)
            if type(c) is kind and c.k is None:
                args.extend(c.args)
            else:
                args.append(c)
        return kind(tuple(args), f.k)
    if isinstance(f, Not):
        return Not(flatten(f.child))
    if isinstance(f, (Eventually, Always)):
        return type(f)(f.t1, f.t2, flatten(f.child), f.k)
    if isinstance(f, Until):
        return Until(f.t1, f.t2, flatten(f.left), flatten(f.right), f.k)
    return f


# ---------------------------------------------------------------- predicate table


class PredicateTable(Mapping):
    """Name -> :class:`Predicate` (or a macro :class:`Formula`) lookup."""

    def __init__(self, q: int | None = None, entries: Mapping | None = None):
        self.q = q
        self._entries: dict[str, Predicate | Formula] = {}
        for name, e in (entries or {}).items():
            self.add(name, e)

    def __getitem__(self, name):
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def add(self, name: str, entry) -> None:
        if name in self._entries:
            raise ValueError(f"duplicate predicate identifier {name!r}")
        if isinstance(entry, Predicate) and self.q is not None and entry.q is not None:
            if entry.q != self.q:
                raise ValueError(
                    f"predicate {name!r} has {entry.q} coefficients, table expects q={self.q}"
                )
        self._entries[name] = entry

    def formula(self, name: str) -> Formula:
        e = self._entries[name]
        return Pred(e) if isinstance(e, Predicate) else e

    def affine(self, name, c, b=0.0, noise=(0.0, 0.0)) -> Predicate:
        p = Predicate.affine(name, c, b, noise)
        self.add(name, p)
        return p

    def box(self, name, channels, lo, hi, noise=(0.0, 0.0)) -> Formula:
        """Register ``lo <= s[channels] <= hi`` as a conjunction of affine predicates.

        The component predicates are registered as ``{name}_lo{i}`` and
        ``{name}_hi{i}`` so printed formulas re-parse against this table.
        """
        if self.q is None:
            raise ValueError("box predicates need the table's sample length q")
        parts = []
        for i, (ch, a, b) in enumerate(zip(channels, lo, hi)):
            if a > b:
                raise ValueError(f"box {name!r}: lower bound exceeds upper bound on axis {i}")
            c = np.zeros(self.q)
            c[ch] = 1.0
            parts.append(Pred(self.affine(f"{name}_lo{i}", c, -a, noise)))
            parts.append(Pred(self.affine(f"{name}_hi{i}", -c, b, noise)))
        macro = And(tuple(parts))
        self.add(name, macro)
        return macro


# ---------------------------------------------------------------- printing


def format_formula(f: Formula) -> str:
    """Render ``f`` in the textual grammar accepted by :func:`smoothstl.parser.parse`."""
    if isinstance(f, Pred):
        return f.pred.name
    if isinstance(f, Not):
        return "!" + _wrap_unary(f.child)
    if isinstance(f, Eventually):
        return f"F[{f.t1},{f.t2}] " + _wrap_unary(f.child)
    if isinstance(f, Always):
        return f"G[{f.t1},{f.t2}] " + _wrap_unary(f.child)
    if isinstance(f, And):
        return " & ".join(_wrap_binary(c) for c in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap_binary(c) for c in f.args)
    if isinstance(f, Until):
        return f"{_wrap_atom(f.left)} U[{f.t1},{f.t2}] {_wrap_atom(f.right)}"
    raise TypeError(f"not a formula node: {f!r}")


def _wrap_atom(f):
    s = format_formula(f)
    return s if isinstance(f, Pred) else f"({s})"


def _wrap_unary(f):
    return _wrap_atom(f) if isinstance(f, (And, Or, Until)) else format_formula(f)


def _wrap_binary(f):
    return _wrap_atom(f) if isinstance(f, (And, Or, Until)) else format_formula(f)
