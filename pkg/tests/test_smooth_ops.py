import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smoothstl.gradients import finite_diff_grad
from smoothstl.smooth_ops import (
    BandMode,
    Interval,
    OpKind,
    op_error_band,
    smooth_op,
    smooth_op_grad,
    value_free_band,
)

E = math.e
KINDS = list(OpKind)


def _exact(kind, a):
    return min(a) if kind.is_min else max(a)


def test_quasi_min_of_equal_pair():
    assert smooth_op(OpKind.QUASI_MIN, [0.0, 0.0], 1.0) == pytest.approx(-0.693147, abs=1e-6)
    assert smooth_op(OpKind.QUASI_MIN, [0.0, 0.0], 1.0) == pytest.approx(-math.log(2), abs=1e-15)


def test_soft_max_closed_form():
    assert smooth_op(OpKind.SOFT_MAX, [1.0, 0.0], 1.0) == pytest.approx(0.731059, abs=1e-6)
    assert smooth_op(OpKind.SOFT_MAX, [1.0, 0.0], 1.0) == pytest.approx(E / (1 + E), abs=1e-15)


def test_quasi_max_closed_form():
    assert smooth_op(OpKind.QUASI_MAX, [1.0, 0.0], 1.0) == pytest.approx(1.313262, abs=1e-6)
    assert smooth_op(OpKind.QUASI_MAX, [1.0, 0.0], 1.0) == pytest.approx(math.log(1 + E), abs=1e-15)


def test_gradient_examples():
    np.testing.assert_allclose(smooth_op_grad(OpKind.QUASI_MAX, [1.0, 0.0], 1.0), [0.731059, 0.268941], atol=1e-6)
    np.testing.assert_allclose(smooth_op_grad(OpKind.SOFT_MAX, [1.0, 0.0], 1.0), [0.927671, 0.072329], atol=1e-6)
    for kind in KINDS:
        assert smooth_op_grad(kind, [2.5], 4.0).tolist() == [1.0]


@pytest.mark.parametrize("kind", KINDS)
def test_single_operand_is_identity(kind):
    assert smooth_op(kind, [2.5], 7.0) == 2.5


def test_unstabilised_formulas_agree_at_small_scale():
    a = np.array([0.3, -0.2, 0.9, 0.1])
    k = 1.7
    assert smooth_op(OpKind.QUASI_MIN, a, k) == pytest.approx(-np.log(np.exp(-k * a).sum()) / k, abs=1e-14)
    assert smooth_op(OpKind.QUASI_MAX, a, k) == pytest.approx(np.log(np.exp(k * a).sum()) / k, abs=1e-14)
    w = np.exp(-k * a)
    assert smooth_op(OpKind.SOFT_MIN, a, k) == pytest.approx((a * w).sum() / w.sum(), abs=1e-14)
    w = np.exp(k * a)
    assert smooth_op(OpKind.SOFT_MAX, a, k) == pytest.approx((a * w).sum() / w.sum(), abs=1e-14)


@pytest.mark.parametrize("kind", KINDS)
def test_no_overflow_at_large_scale(kind):
    v = smooth_op(kind, [1000.0, -1000.0, 999.0], 10.0)
    assert math.isfinite(v)


@pytest.mark.parametrize("bad", [([], 1.0), ([1.0], 0.0), ([1.0], -1.0), ([np.nan], 1.0), ([np.inf, 0.0], 1.0)])
def test_invalid_inputs(bad):
    a, k = bad
    with pytest.raises(ValueError):
        smooth_op(OpKind.QUASI_MIN, a, k)


def test_band_examples():
    assert op_error_band(OpKind.QUASI_MIN, [3.0, 7.0], 1.0, BandMode.VALUE_FREE).hi == pytest.approx(math.log(2))
    iv = op_error_band(OpKind.QUASI_MIN, [0.0, 0.0], 1.0, "tight")
    assert iv.as_list() == pytest.approx([0.0, math.log(2)])
    err = 0.0 - smooth_op(OpKind.QUASI_MIN, [0.0, 0.0], 1.0)
    assert err == pytest.approx(iv.hi, abs=1e-15)
    iv = op_error_band(OpKind.SOFT_MAX, [1.0, 0.0], 1.0, "tight")
    assert iv.as_list() == pytest.approx([0.0, 0.268941], abs=1e-6)
    assert 1.0 - smooth_op(OpKind.SOFT_MAX, [1.0, 0.0], 1.0) == pytest.approx(iv.hi, abs=1e-15)


def test_value_free_soft_band_needs_range():
    with pytest.raises(ValueError):
        op_error_band(OpKind.SOFT_MIN, [1.0, 2.0], 1.0, "value_free")
    iv = op_error_band(OpKind.SOFT_MIN, [1.0, 2.0, 0.0], 1.0, "value_free", range_bound=4.0)
    assert iv.as_list() == pytest.approx([-4.0 * 2 / 3, 0.0])
    assert value_free_band(OpKind.SOFT_MAX, 1, 3.0, 5.0).as_list() == [0.0, 0.0]


def test_value_free_quasi_width_scales_inverse_k():
    for m in (2, 5, 21):
        assert value_free_band(OpKind.QUASI_MAX, m, 6.0).width == value_free_band(OpKind.QUASI_MAX, m, 3.0).width / 2


def test_soft_operators_approach_mean_for_tiny_k():
    a = np.array([1.0, 4.0, -2.0, 0.5])
    assert smooth_op(OpKind.SOFT_MIN, a, 1e-9) == pytest.approx(a.mean(), abs=1e-6)
    assert smooth_op(OpKind.SOFT_MAX, a, 1e-9) == pytest.approx(a.mean(), abs=1e-6)


def test_interval_basics():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    iv = Interval(-1.0, 2.0) + Interval(0.5, 0.5)
    assert iv.as_list() == [-0.5, 2.5] and iv.width == 3.0
    assert iv.contains(2.5) and not iv.contains(2.6) and iv.contains(2.6, slack=0.2)
    assert Interval(0, 1).hull(Interval(3, 4)).as_list() == [0.0, 4.0]


vectors = st.lists(st.floats(-10, 10), min_size=1, max_size=50)
ks = st.sampled_from([0.5, 1.0, 3.0, 10.0])


@given(vectors, ks, st.sampled_from(KINDS))
def test_one_sidedness(a, k, kind):
    v = smooth_op(kind, a, k)
    if kind is OpKind.QUASI_MIN:
        assert v <= min(a)
    elif kind is OpKind.QUASI_MAX:
        assert v >= max(a)
    elif kind is OpKind.SOFT_MIN:
        assert v >= min(a)
    else:
        assert v <= max(a)


@given(vectors, ks, st.sampled_from(KINDS))
def test_gradient_sums_to_one(a, k, kind):
    assert smooth_op_grad(kind, a, k).sum() == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8), st.sampled_from([0.5, 1.0, 3.0]), st.sampled_from(KINDS))
def test_gradient_matches_finite_differences(a, k, kind):
    g = smooth_op_grad(kind, a, k)
    fd = finite_diff_grad(lambda v: smooth_op(kind, v, k), a)
    assert np.max(np.abs(g - fd)) <= 1e-6 * max(np.max(np.abs(fd)), 1.0)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=50), ks, st.sampled_from(KINDS))
def test_bands_contain_error_and_tight_inside_value_free(a, k, kind):
    err = _exact(kind, a) - smooth_op(kind, a, k)
    tight = op_error_band(kind, a, k, "tight")
    free = op_error_band(kind, a, k, "value_free", range_bound=max(a) - min(a))
    assert tight.contains(err, 1e-9)
    assert free.contains(err, 1e-9)
    assert tight.issubset(free, 1e-9)
