"""Smooth operators, their error bands and a certified formula interval.

Run: python3 demos/operators_and_bounds.py
"""

import numpy as np

from smoothstl import (
    OpKind,
    PredicateTable,
    SmoothConfig,
    error_interval,
    error_interval_signal_free,
    op_error_band,
    parse,
    robustness,
    smooth_op,
    smooth_robustness,
    to_nnf,
)

a = np.array([1.0, 0.4, -0.3, 0.9])
print("operands", a)
for kind in OpKind:
    for k in (1.0, 10.0):
        val = smooth_op(kind, a, k)
        band = op_error_band(kind, a, k)
        exact = a.min() if kind.is_min else a.max()
        print(f"  {kind.value:9s} k={k:4.1f}  value={val:+.4f}  exact-smooth={exact - val:+.4f}  band={band.as_list()}")

# Two scalar channels; "a" reads channel 0, "b" reads channel 1 shifted down by 0.2.
table = PredicateTable(q=2)
table.affine("a", [1.0, 0.0])
table.affine("b", [0.0, 1.0], -0.2, noise=(-0.01, 0.01))
f = to_nnf(parse("G[0,3] (a | F[0,2] b)", table))

rng = np.random.default_rng(0)
s = rng.normal(size=(7, 2))
print("\nformula G[0,3] (a | F[0,2] b) on a random signal")
print(f"  exact robustness {robustness(f, s):+.4f}")
for srm in ("SRM1", "SRM2", "SRM3", "SRM4"):
    cfg = SmoothConfig(srm, 3.0, 3.0)
    val = smooth_robustness(f, s, cfg)
    rep = error_interval(f, s, cfg)
    lo, hi = val + rep.lo, val + rep.hi
    print(f"  {srm}: smooth {val:+.4f}  certified exact range [{lo:+.4f}, {hi:+.4f}]")

free = error_interval_signal_free(f, SmoothConfig("SRM1", 3.0, 3.0))
print(f"  SRM1 signal-free interval {free.interval.as_list()} (holds for every signal)")
