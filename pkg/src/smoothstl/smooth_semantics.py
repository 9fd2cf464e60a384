"""Smooth robustness measures SRM1-SRM4.

Each SRM swaps the exact min/max of the robust semantics for a pair of smooth
operators:

======  ===========  ===========
SRM     smooth-min   smooth-max
======  ===========  ===========
SRM1    QuasiMin     QuasiMax
SRM2    QuasiMin     SoftMax
SRM3    SoftMin      QuasiMax
SRM4    SoftMin      SoftMax
======  ===========  ===========

SRM2 under-approximates the exact robustness (a positive value certifies
satisfaction), SRM3 over-approximates it (a negative value certifies
violation).

Predicate noise never enters the smooth value; it only widens the error
intervals computed in :mod:`smoothstl.error_semantics`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .formula import (
    Always,
    And,
    Eventually,
    Formula,
    NNFError,
    Not,
    Or,
    Pred,
    Until,
    child_path,
    horizon,
    is_nnf,
    predicates,
)
from .semantics import as_signal, check_horizon, windows
from .smooth_ops import OpKind, reduce


class SRM(enum.Enum):
    SRM1 = "SRM1"
    SRM2 = "SRM2"
    SRM3 = "SRM3"
    SRM4 = "SRM4"

    @property
    def min_kind(self) -> OpKind:
        return OpKind.QUASI_MIN if self in (SRM.SRM1, SRM.SRM2) else OpKind.SOFT_MIN

    @property
    def max_kind(self) -> OpKind:
        return OpKind.QUASI_MAX if self in (SRM.SRM1, SRM.SRM3) else OpKind.SOFT_MAX

    @classmethod
    def parse(cls, v) -> "SRM":
        if isinstance(v, SRM):
            return v
        v = str(v).upper()
        return cls(v if v.startswith("SRM") else f"SRM{v}")


def _path_key(p) -> str:
    if isinstance(p, (tuple, list)):
        return "/" + "/".join(str(i) for i in p)
    p = str(p)
    return p if p.startswith("/") else "/" + p


@dataclass(frozen=True)
class SmoothConfig:
    """Which SRM to use plus its operator parameters.

    ``overrides`` maps node paths (``"/"``, ``"/0/1"``, ...) to ``(k1, k2)``
    and wins over any parameter stored on the node itself, which in turn wins
    over ``k1``/``k2``.
    """

    srm: SRM = SRM.SRM1
    k1: float = 3.0
    k2: float = 3.0
    overrides: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    noise_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "srm", SRM.parse(self.srm))
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be positive")
        ov = {}
        for path, (a, b) in dict(self.overrides).items():
            if not (a > 0 and b > 0):
                raise ValueError(f"override at {path!r} must be positive, got {(a, b)}")
            ov[_path_key(path)] = (float(a), float(b))
        object.__setattr__(self, "overrides", MappingProxyType(ov))
        object.__setattr__(self, "k1", float(self.k1))
        object.__setattr__(self, "k2", float(self.k2))

    def __hash__(self):
        return hash((self.srm, self.k1, self.k2, tuple(sorted(self.overrides.items())), self.noise_enabled))

    def __eq__(self, other):
        return isinstance(other, SmoothConfig) and self.to_dict() == other.to_dict()

    def params(self, path: str, node: Formula | None = None) -> tuple[float, float]:
        if path in self.overrides:
            return self.overrides[path]
        k = getattr(node, "k", None)
        if k is not None:
            return float(k[0]), float(k[1])
        return self.k1, self.k2

    def replace(self, **changes) -> "SmoothConfig":
        data = dict(srm=self.srm, k1=self.k1, k2=self.k2, overrides=dict(self.overrides), noise_enabled=self.noise_enabled)
        data.update(changes)
        return SmoothConfig(**data)

    def to_dict(self):
        return {
            "srm": self.srm.value,
            "k1": self.k1,
            "k2": self.k2,
            "overrides": {p: list(v) for p, v in self.overrides.items()},
            "noise_enabled": self.noise_enabled,
        }

    @classmethod
    def from_dict(cls, d) -> "SmoothConfig":
        return cls(
            srm=d.get("srm", "SRM1"),
            k1=d.get("k1", 3.0),
            k2=d.get("k2", 3.0),
            overrides={p: tuple(v) for p, v in d.get("overrides", {}).items()},
            noise_enabled=d.get("noise_enabled", True),
        )


@dataclass
class NodeRecord:
    """Forward-pass data for one node, over ``t = 0..len(values)-1``.

    For And/Or/F/G, ``inputs`` holds the operand rows fed to the smooth
    operator and ``weights`` its partial derivatives. Until keeps the
    windows of both operands, the running smooth-min over the right
    operand (``prefix``), the pairwise smooth-min inputs (``pair_in``) and
    the outer smooth-max inputs (``inputs``).
    """

    path: str
    node: Formula
    k1: float
    k2: float
    values: np.ndarray
    inputs: np.ndarray | None = None
    weights: np.ndarray | None = None
    prefix: np.ndarray | None = None
    prefix_weights: list | None = None
    pair_in: np.ndarray | None = None
    pair_weights: np.ndarray | None = None
    right_windows: np.ndarray | None = None


class SmoothTrace:
    """One forward evaluation of an SRM over every time index of a signal."""

    def __init__(self, f: Formula, samples: np.ndarray, cfg: SmoothConfig, grad: bool = False):
        if not is_nnf(f):
            raise NNFError("smooth semantics require negation normal form; call to_nnf first")
        self.formula = f
        self.samples = samples
        self.cfg = cfg
        self.grad = grad
        self.records: dict[str, NodeRecord] = {}
        self._eval(f, "/")
        self.root = self.records["/"]

    @property
    def value(self) -> float:
        return float(self.root.values[0])

    def postorder(self):
        return list(self.records.values())

    def _eval(self, f, path) -> np.ndarray:
        S = self.samples
        n = S.shape[0] - horizon(f)
        srm = self.cfg.srm
        if isinstance(f, Pred):
            rec = NodeRecord(path, f, 0.0, 0.0, f.pred.value(S))
        elif isinstance(f, Not):
            inner = self._eval(f.child, child_path(path, 0))
            rec = NodeRecord(path, f, 0.0, 0.0, -inner)
        else:
            k1, k2 = self.cfg.params(path, f)
            rec = NodeRecord(path, f, k1, k2, None)
            if isinstance(f, (And, Or)):
                cols = [self._eval(c, child_path(path, i))[:n] for i, c in enumerate(f.args)]
                kind, k = (srm.min_kind, k1) if isinstance(f, And) else (srm.max_kind, k2)
                self._apply(rec, kind, np.stack(cols, axis=1), k)
            elif isinstance(f, (Eventually, Always)):
                child = self._eval(f.child, child_path(path, 0))
                kind, k = (srm.max_kind, k2) if isinstance(f, Eventually) else (srm.min_kind, k1)
                self._apply(rec, kind, windows(child, f.t1, f.t2, n), k)
            elif isinstance(f, Until):
                self._until(rec, f, path, n)
            else:
                raise TypeError(f"not a formula node: {f!r}")
        self.records[path] = rec
        return rec.values

    def _apply(self, rec, kind, M, k):
        rec.inputs = M
        if self.grad:
            rec.values, rec.weights = reduce(kind, M, k, grad=True)
        else:
            rec.values = reduce(kind, M, k)

    def _until(self, rec, f, path, n):
        srm, k1, k2 = self.cfg.srm, rec.k1, rec.k2
        left = windows(self._eval(f.left, child_path(path, 0)), f.t1, f.t2, n)
        right = windows(self._eval(f.right, child_path(path, 1)), f.t1, f.t2, n)
        W = f.t2 - f.t1 + 1
        prefix = np.empty((n, W))
        pw = []
        for j in range(W):
            if self.grad:
                prefix[:, j], wj = reduce(srm.min_kind, right[:, : j + 1], k1, grad=True)
                pw.append(wj)
            else:
                prefix[:, j] = reduce(srm.min_kind, right[:, : j + 1], k1)
        pair_in = np.stack([left, prefix], axis=2)
        if self.grad:
            pair, rec.pair_weights = reduce(srm.min_kind, pair_in, k1, grad=True)
        else:
            pair = reduce(srm.min_kind, pair_in, k1)
        rec.prefix, rec.prefix_weights, rec.pair_in = prefix, pw, pair_in
        rec.right_windows = right
        self._apply(rec, srm.max_kind, pair, k2)


def smooth_trace(f: Formula, s, cfg: SmoothConfig, grad: bool = False, t: int = 0) -> SmoothTrace:
    s = as_signal(s)
    check_horizon(f, s, t)
    return SmoothTrace(f, s.samples, cfg, grad)


def smooth_robustness(f: Formula, s, cfg: SmoothConfig, t: int = 0) -> float:
    """Smooth robustness of ``f`` (in negation normal form) on the suffix ``(s, t)``."""
    s = as_signal(s)
    check_horizon(f, s, t)
    return float(SmoothTrace(f, s.samples, cfg).root.values[t])


class Guarantee(enum.Enum):
    SOUND = "Sound"
    REVERSE_SOUND = "ReverseSound"
    ASYMPTOTIC_ONLY = "AsymptoticOnly"


def classify(cfg: SmoothConfig, formula: Formula | None = None) -> Guarantee:
    """Which one-sided guarantee the configured SRM gives.

    Predicate noise (when enabled in ``cfg``) makes the error interval
    straddle zero, which removes both guarantees.
    """
    if formula is not None and cfg.noise_enabled:
        if any(not p.is_noiseless for p in predicates(formula)):
            return Guarantee.ASYMPTOTIC_ONLY
    if cfg.srm is SRM.SRM2:
        return Guarantee.SOUND
    if cfg.srm is SRM.SRM3:
        return Guarantee.REVERSE_SOUND
    return Guarantee.ASYMPTOTIC_ONLY
