from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from qet.errors import HypothesisViolated, InvalidDims, InvalidParams
from qet.haar import DimensionProfile
from qet.moments import (generic_dimension_threshold, gos_empirical_check,
                         mc_overlap_moment, overlap_samples, sphere_fourth_moment,
                         sphere_mean, sphere_variance)
from qet.rng import SeedSpec


def test_closed_form_examples():
    assert sphere_mean(5, 20) == Fraction(1, 4)
    assert sphere_mean(7, 7) == 1
    assert sphere_mean(1, 2) == Fraction(1, 2)
    assert sphere_variance(7, 7) == 0
    assert sphere_variance(1, 2) == Fraction(1, 12)
    assert sphere_variance(5, 20) == Fraction(75, 8400)
    assert sphere_fourth_moment(1, 1) == 1
    assert sphere_fourth_moment(1, 2) == Fraction(1, 3)
    assert sphere_fourth_moment(1, 3, "real") == Fraction(1, 5)


def test_dims_rejected():
    for f in (sphere_mean, sphere_variance, sphere_fourth_moment):
        with pytest.raises(InvalidDims):
            f(0, 3)
        with pytest.raises(InvalidDims):
            f(4, 3)
    with pytest.raises(InvalidParams):
        sphere_fourth_moment(1, 2, "quaternion")


@given(st.integers(1, 200).flatmap(lambda D: st.tuples(st.integers(1, D), st.just(D))))
def test_variance_identity_and_symmetry(dD):
    d, D = dD
    assert sphere_variance(d, D) == sphere_fourth_moment(d, D) - sphere_mean(d, D) ** 2
    if d < D:
        assert sphere_variance(d, D) == sphere_variance(D - d, D)


def test_real_fourth_moment_by_mc():
    # |x_1..x_m|^2 for x uniform on the real sphere S^{n-1}
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200_000, 5))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    v = np.sum(x[:, :2] ** 2, axis=1) ** 2
    cf = float(sphere_fourth_moment(2, 5, "real"))
    assert abs(v.mean() - cf) <= 4 * v.std(ddof=1) / np.sqrt(v.size)


@pytest.mark.parametrize("mode", ["vary-state", "vary-decomposition"])
def test_mc_examples(mode):
    p = DimensionProfile([5, 15])
    r1 = mc_overlap_moment(SeedSpec(21), p, 0, 1, 100_000, mode)
    assert r1.closed_form == 0.25 and r1.mc_std_error > 0
    assert abs(r1.mc_estimate - 0.25) <= 4 * r1.mc_std_error
    r2 = mc_overlap_moment(SeedSpec(22), p, 0, 2, 100_000, mode)
    assert r2.closed_form == pytest.approx(0.0089286 + 0.0625, abs=1e-6)
    assert abs(r2.mc_estimate - r2.closed_form) <= 4 * r2.mc_std_error
    r3 = mc_overlap_moment(SeedSpec(23), DimensionProfile([1, 1]), 0, 1, 10_000, mode)
    assert abs(r3.mc_estimate - 0.5) <= 4 * r3.mc_std_error


def test_mc_deterministic_and_worker_independent():
    p = DimensionProfile([2, 3])
    a = overlap_samples(SeedSpec(1), p, 0, 5000, chunk=512, workers=1)
    b = overlap_samples(SeedSpec(1), p, 0, 5000, chunk=512, workers=4)
    assert np.array_equal(a, b)


def test_modes_agree_in_distribution():
    p = DimensionProfile([3, 4])
    x = overlap_samples(SeedSpec(30), p, 0, 20_000, "vary-state")
    y = overlap_samples(SeedSpec(31), p, 0, 20_000, "vary-decomposition")
    assert stats.ks_2samp(x, y).pvalue > 0.001


def test_mc_rejects_bad_args():
    p = DimensionProfile([1, 1])
    with pytest.raises(InvalidParams):
        mc_overlap_moment(SeedSpec(0), p, 0, 3, 10)
    with pytest.raises(InvalidParams):
        mc_overlap_moment(SeedSpec(0), p, 0, 1, 1)
    with pytest.raises(InvalidParams):
        overlap_samples(SeedSpec(0), p, 0, 10, "sideways")


def test_threshold_examples():
    assert generic_dimension_threshold(1, 1, 2, 4) == pytest.approx(-1.0)
    assert generic_dimension_threshold(0.1, 0.1, 2, 100) == pytest.approx(97.475)
    assert generic_dimension_threshold(1e-9, 0.5, 2, 50) == pytest.approx(50.0)
    for args in [(0, 0.5, 2, 4), (1, 0, 2, 4), (1, 1.5, 2, 4), (1, 0.5, 1, 4), (1, 0.5, 5, 4)]:
        with pytest.raises(InvalidParams):
            generic_dimension_threshold(*args)


def test_gos_examples():
    frac = gos_empirical_check(SeedSpec(40), DimensionProfile([10, 10]), 1.0, 0.5, 10_000)
    se = np.sqrt(0.25 / 10_000)
    assert frac >= 0.5 - 4 * se
    frac = gos_empirical_check(SeedSpec(41), DimensionProfile([1, 1]), 10.0, 0.5, 2000)
    assert frac == 1.0
    with pytest.raises(HypothesisViolated):
        gos_empirical_check(SeedSpec(42), DimensionProfile([10, 10]), 0.1, 0.5, 100)
