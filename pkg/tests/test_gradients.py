import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smoothstl.dynamics import linear_system, rollout, single_integrator_2d
from smoothstl.formula import Always, And, Eventually, Or, Pred, Predicate, horizon
from smoothstl.gradients import (
    finite_diff_grad,
    grad_wrt_controls,
    grad_wrt_signal,
    relative_error,
    signal_jacobian,
)
from smoothstl.smooth_ops import OpKind, smooth_op
from smoothstl.smooth_semantics import SmoothConfig, smooth_robustness
from smoothstl.testing import random_formula, random_linear_system, random_predicates

from conftest import channel
from helpers import random_case

SEEDS = st.integers(0, 2**32 - 1)
SRM_NAMES = st.sampled_from(["SRM1", "SRM2", "SRM3", "SRM4"])


def test_predicate_gradient_lands_in_first_block():
    c = np.array([0.5, -2.0, 1.0])
    p = Pred(Predicate.affine("p", c, 0.3))
    g = grad_wrt_signal(p, np.zeros((3, 3)), SmoothConfig())
    np.testing.assert_array_equal(g, np.concatenate([c, np.zeros(6)]))


def test_eventually_weights_scatter_on_channel():
    f = Eventually(0, 1, Pred(channel("s0", 0, 1)))
    g = grad_wrt_signal(f, [[1.0], [0.0]], SmoothConfig("SRM1", k2=1.0))
    np.testing.assert_allclose(g, [0.731059, 0.268941], atol=1e-6)
    np.testing.assert_allclose(g, [math.e / (1 + math.e), 1 / (1 + math.e)], atol=1e-15)


def test_finite_diff_examples():
    assert finite_diff_grad(lambda x: float(x @ x), np.array([3.0]))[0] == pytest.approx(6.0, abs=1e-6)
    np.testing.assert_array_equal(finite_diff_grad(lambda x: 4.0, np.ones(3)), np.zeros(3))
    fd = finite_diff_grad(lambda a: smooth_op(OpKind.QUASI_MAX, a, 1.0), np.array([1.0, 0.0]))
    np.testing.assert_allclose(fd, [0.731059, 0.268941], atol=1e-6)
    with pytest.raises(ValueError):
        finite_diff_grad(lambda x: 0.0, np.ones(1), step=0.0)


def test_single_integrator_jacobian_blocks():
    T = 4
    J = signal_jacobian(single_integrator_2d(1.0), np.zeros((T + 1, 2)), [0, 0])
    q, m = 6, 2
    for t in range(T + 1):
        for tau in range(T + 1):
            blk = J[t * q : (t + 1) * q, tau * m : (tau + 1) * m]
            want_x = np.eye(2) if tau < t else np.zeros((2, 2))
            np.testing.assert_array_equal(blk[2:4], want_x)
            np.testing.assert_array_equal(blk[:2], want_x)
            np.testing.assert_array_equal(blk[4:], np.eye(2) if t == tau else np.zeros((2, 2)))


def test_scalar_sensitivity_product():
    sys = linear_system([[2.0]], [[1.0]])
    u = np.zeros((4, 1))
    J = signal_jacobian(sys, u, [1.0])
    q = 3
    assert J[3 * q + 1, 0] == 4.0  # dx_3/du_0 = A^2 B
    fd = finite_diff_grad(lambda v: rollout(sys, v, [1.0]).x[3, 0], u)
    assert fd[0, 0] == pytest.approx(4.0, abs=1e-6)


def test_feedthrough_block():
    sys = linear_system([[0.5]], [[1.0]], [[1.0]], [[0.7]])
    J = signal_jacobian(sys, np.zeros((3, 1)), [0.0])
    assert J[1 * 3 + 0, 1] == 0.7  # dy_1/du_1 = D


@given(SEEDS)
def test_jacobian_is_causal(seed):
    rng = np.random.default_rng(seed)
    sys = random_linear_system(rng, 3, 2, 2)
    T = int(rng.integers(1, 8))
    J = signal_jacobian(sys, rng.normal(size=(T + 1, 2)), rng.normal(size=3))
    q, m = sys.q, sys.m
    for t in range(T + 1):
        for tau in range(t + 1, T + 1):
            assert not np.any(J[t * q : (t + 1) * q, tau * m : (tau + 1) * m])


def test_control_only_formula_uses_u_blocks_verbatim():
    sys = random_linear_system(np.random.default_rng(4), 2, 2, 2)
    c = np.zeros(6)
    c[4], c[5] = 1.0, -0.5
    f = Always(0, 3, Pred(Predicate.affine("u", c, 0.2)))
    u = np.random.default_rng(5).normal(size=(5, 2))
    sig = rollout(sys, u, [0.1, 0.2])
    cfg = SmoothConfig("SRM3", 2.0, 2.0)
    gs = grad_wrt_signal(f, sig, cfg).reshape(5, 6)
    np.testing.assert_array_equal(grad_wrt_controls(f, sys, u, [0.1, 0.2], cfg).reshape(5, 2), gs[:, 4:])


@given(SEEDS, SRM_NAMES, st.sampled_from([0.5, 1.0, 3.0]))
def test_signal_gradient_matches_finite_differences(seed, srm, k):
    _, _, f, s = random_case(seed)
    cfg = SmoothConfig(srm, k, k)
    g = grad_wrt_signal(f, s, cfg)
    fd = finite_diff_grad(lambda v: smooth_robustness(f, v.reshape(s.shape), cfg), s.ravel())
    assert relative_error(g, fd) <= 1e-6


@given(SEEDS, SRM_NAMES)
def test_suffix_gradient_has_zero_prefix(seed, srm):
    _, _, f, s = random_case(seed, extra=4)
    t = s.shape[0] - 1 - horizon(f)
    cfg = SmoothConfig(srm)
    g = grad_wrt_signal(f, s, cfg, t)
    assert not np.any(g[: t * s.shape[1]])
    fd = finite_diff_grad(lambda v: smooth_robustness(f, v.reshape(s.shape), cfg, t), s.ravel())
    assert relative_error(g, fd) <= 1e-6


def _single_channel(rng, depth):
    p = Predicate.affine("p", [1.0], 0.0)
    if depth == 0 or rng.random() < 0.2:
        return Pred(p)
    op = rng.integers(4)
    sub = lambda: _single_channel(rng, depth - 1)
    if op == 0:
        return And((sub(), sub()))
    if op == 1:
        return Or((sub(), sub(), sub()))
    if op == 2:
        return Eventually(0, int(rng.integers(0, 4)), sub())
    return Always(1, int(rng.integers(1, 4)), sub())


@given(SEEDS, SRM_NAMES)
def test_adjoints_on_one_channel_sum_to_one(seed, srm):
    # Quasi and Soft weights are both partitions of unity, so with a single shared
    # channel the scattered adjoints sum to one.
    rng = np.random.default_rng(seed)
    f = _single_channel(rng, 4)
    s = rng.normal(size=(horizon(f) + 2, 1))
    assert grad_wrt_signal(f, s, SmoothConfig(srm, 1.5, 2.5)).sum() == pytest.approx(1.0, abs=1e-12)


@given(SEEDS, SRM_NAMES, st.integers(1, 30))
def test_adjoint_equals_dense(seed, srm, T):
    rng = np.random.default_rng(seed)
    sys = random_linear_system(rng, 3, 2, 2)
    preds = random_predicates(rng, sys.q, 3)
    f = random_formula(rng, preds, depth=3, max_window=min(3, T))
    if horizon(f) > T:
        f = Pred(preds[0])
    u = rng.normal(size=(T + 1, 2))
    x0 = rng.normal(size=3)
    cfg = SmoothConfig(srm, 2.0, 2.0)
    a = grad_wrt_controls(f, sys, u, x0, cfg)
    d = grad_wrt_controls(f, sys, u, x0, cfg, method="dense")
    assert np.max(np.abs(a - d)) <= 1e-10


@given(SEEDS, SRM_NAMES, st.sampled_from([1.0, 3.0, 5.0]))
def test_control_gradient_matches_finite_differences(seed, srm, k):
    rng = np.random.default_rng(seed)
    sys = random_linear_system(rng, 2, 2, 2)
    preds = random_predicates(rng, sys.q, 3)
    f = random_formula(rng, preds, depth=3, max_window=3)
    T = horizon(f) + 2
    u = rng.normal(scale=0.5, size=(T + 1, 2))
    x0 = rng.normal(size=2)
    cfg = SmoothConfig(srm, k, k)
    g = grad_wrt_controls(f, sys, u, x0, cfg)
    fd = finite_diff_grad(lambda v: smooth_robustness(f, rollout(sys, v, x0), cfg), u).ravel()
    assert relative_error(g, fd) <= 1e-5


def test_unknown_method():
    with pytest.raises(ValueError):
        grad_wrt_controls(Pred(channel("p", 0, 6)), single_integrator_2d(), np.zeros((2, 2)), [0, 0], SmoothConfig(), method="magic")
