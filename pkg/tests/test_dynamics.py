import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qet import dynamics as dyn
from qet.errors import (ExpansionTooLarge, HypothesisViolated, InvalidParams,
                        ResonantSpectrum)
from qet.haar import (Decomposition, DimensionProfile, g_nu, projector_elements,
                      sample_decomposition, sample_unit_state, weights)
from qet.rng import SeedSpec

from oracles import nr_brute_force, time_average_oracle


def instance(seed, dims=(2, 4)):
    profile = DimensionProfile(dims)
    s = SeedSpec(seed)
    H = dyn.sample_gue(s.generator(0), profile.D)
    psi = sample_unit_state(s.generator(1), profile.D)
    dec = sample_decomposition(s.generator(2), profile)
    return H, psi, dec


# ---------------------------------------------------------------- check_nr

def test_check_nr_examples():
    r = dyn.check_nr([0.0, 1.0, 3.0, 7.0])
    assert r.nondegenerate and r.nonresonant and r.witness is None
    r = dyn.check_nr([0.0, 1.0, 1.0, 2.0])
    assert not r.nondegenerate and not r.nonresonant and r.witness == (2, 3)
    r = dyn.check_nr([0.0, 1.0, 2.0, 4.0])
    assert r.nondegenerate and not r.nonresonant and r.witness == (2, 1, 3, 2)


def test_check_nr_requires_sorted():
    with pytest.raises(InvalidParams):
        dyn.check_nr([1.0, 0.0])


@given(st.lists(st.integers(0, 12), min_size=2, max_size=6))
def test_check_nr_matches_brute_force(levels):
    E = np.sort(np.array(levels, dtype=float))
    if E[-1] == E[0]:
        return
    r = dyn.check_nr(E)
    assert (r.nondegenerate, r.nonresonant) == nr_brute_force(E, 1e-9)
    if r.witness is not None and len(r.witness) == 4:
        a, b, a2, b2 = (i - 1 for i in r.witness)
        assert E[a] - E[b] == pytest.approx(E[a2] - E[b2])


def test_nonresonant_implies_nondegenerate():
    for seed in range(20):
        H = dyn.sample_gue(seed, 5)
        assert H.nondegenerate or not H.nonresonant


# ------------------------------------------------------------------ evolve

def test_evolve_examples():
    H = dyn.Hamiltonian.diagonal([0.0, 1.0])
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    assert np.array_equal(dyn.evolve(H, psi, 0.0), psi)
    out = dyn.evolve(H, psi, math.pi)
    target = np.array([1.0, -1.0]) / math.sqrt(2)
    assert abs(abs(np.vdot(target, out)) - 1) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(-50, 50), st.floats(-50, 50))
def test_evolve_unitary_and_group(seed, s, t):
    H, psi, _ = instance(seed)
    a = dyn.evolve(H, psi, t)
    assert abs(np.linalg.norm(a) - 1) <= 1e-12
    b = dyn.evolve(H, dyn.evolve(H, psi, s), t)
    assert np.linalg.norm(b - dyn.evolve(H, psi, s + t)) <= 1e-10


def test_evolve_many_matches_evolve():
    H, psi, _ = instance(3)
    ts = np.array([0.0, 0.3, 7.0])
    rows = dyn.evolve_many(H, psi, ts)
    for k, t in enumerate(ts):
        assert np.allclose(rows[k], dyn.evolve(H, psi, t), atol=1e-13)


def test_stationary_state_weights_constant():
    H, _, dec = instance(4)
    phi = np.array(H.spectral.eigenvectors[:, 2])
    w0 = weights(dec, phi)
    for t in (0.5, 10.0, 300.0):
        assert np.allclose(weights(dec, dyn.evolve(H, phi, t)), w0, atol=1e-12)


# ----------------------------------------------------------- time averages

def test_stationary_average_is_T_independent():
    H, _, dec = instance(5)
    phi = np.array(H.spectral.eigenvectors[:, 1])
    e = projector_elements(dec, 0, H.spectral)
    expected = (e[1, 1].real - 2 / 6) ** 2
    vals = [dyn.finite_time_average(H, phi, dec, 0, T).finite_time_value for T in (1.0, 10.0, 1e3)]
    # coefficients off the eigenvector are rounding-level, not exactly zero
    assert max(vals) - min(vals) <= 1e-14
    assert vals[0] == pytest.approx(expected, abs=1e-14)
    assert dyn.exact_limit_f(H, phi, dec, 0) == pytest.approx(expected, abs=1e-14)


def test_aligned_two_level_average_is_zero():
    H = dyn.Hamiltonian.diagonal([0.0, 1.0])
    dec = Decomposition.standard(DimensionProfile([1, 1]))
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    for T in (0.1, 10.0, 1e4):
        assert dyn.finite_time_average(H, psi, dec, 0, T).finite_time_value == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("seed,dims", [(10, (2, 4)), (11, (3, 3)), (12, (1, 2, 5)), (13, (4, 4))])
@pytest.mark.parametrize("T", [10.0, 100.0, 1000.0])
def test_fourier_matches_quadrature(seed, dims, T):
    H, psi, dec = instance(seed, dims)
    nu = 0
    got = dyn.finite_time_average(H, psi, dec, nu, T).finite_time_value
    ref = time_average_oracle(np.array(H.matrix), psi, dec.projector(nu), dims[nu] / sum(dims), T)
    assert got == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("seed", [14, 15])
def test_fourier_matches_simpson_short_time(seed):
    H, psi, dec = instance(seed, (2, 3))
    got = dyn.finite_time_average(H, psi, dec, 1, 5.0).finite_time_value
    ref = time_average_oracle(np.array(H.matrix), psi, dec.projector(1), 3 / 5, 5.0, rule="simpson")
    assert got == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_convergence_bound_holds(seed):
    H, psi, dec = instance(100 + seed, (2, 4))
    for nu in (0, 1):
        for T in (10.0, 1e2, 1e3, 1e4):
            r = dyn.finite_time_average(H, psi, dec, nu, T)
            assert r.exact_limit is not None
            assert abs(r.finite_time_value - r.exact_limit) <= r.convergence_bound


def test_limit_is_long_time_average():
    H, psi, dec = instance(20)
    gap = np.min(np.diff(H.spectral.eigenvalues))
    r = dyn.finite_time_average(H, psi, dec, 1, 1e4 / gap)
    assert abs(r.finite_time_value - r.exact_limit) <= r.convergence_bound


def test_term_cap_and_quadrature_fallback():
    H, psi, dec = instance(21)
    with pytest.raises(ExpansionTooLarge):
        dyn.finite_time_average(H, psi, dec, 0, 50.0, term_cap=100)
    quad = dyn.finite_time_average(H, psi, dec, 0, 50.0, term_cap=100, on_overflow="quadrature")
    exact = dyn.finite_time_average(H, psi, dec, 0, 50.0)
    assert quad.method == "quadrature" and math.isinf(quad.convergence_bound)
    assert quad.finite_time_value == pytest.approx(exact.finite_time_value, rel=1e-8)
    assert quad.quadrature_error < 1e-8


def test_time_average_rejects_bad_T():
    H, psi, dec = instance(22)
    with pytest.raises(InvalidParams):
        dyn.finite_time_average(H, psi, dec, 0, 0.0)


@given(st.integers(0, 2**32 - 1))
def test_expansion_invariants(seed):
    H, psi, dec = instance(seed, (2, 3))
    exp = dyn.fourier_expansion(H, psi, dec, 0)
    zero = np.abs(exp.frequencies) <= exp.zero_tol
    assert abs(np.imag(np.sum(exp.coefficients[zero]))) <= 1e-13
    assert np.max(np.abs(exp.coefficients)) <= 2.0
    if H.nonresonant:
        assert exp.limit == pytest.approx(dyn.exact_limit_f(H, psi, dec, 0), abs=1e-12)
    f, a = dyn._linear_terms(H, psi, dec, 0)
    assert np.max(np.abs(np.outer(a, a))) <= 1.0 + 1e-12


# ------------------------------------------------------------- exact limit

@given(st.integers(0, 2**32 - 1))
def test_limit_below_g(seed):
    H, psi, dec = instance(seed, (3, 5))
    for nu in range(2):
        assert dyn.exact_limit_f(H, psi, dec, nu) <= g_nu(dec, nu, H.spectral) + 1e-12


def test_resonant_spectrum_rejected():
    H = dyn.Hamiltonian.diagonal([0.0, 1.0, 2.0, 4.0])
    dec = Decomposition.standard(DimensionProfile([2, 2]))
    psi = np.ones(4) / 2
    with pytest.raises(ResonantSpectrum):
        dyn.exact_limit_f(H, psi, dec, 0)
    r = dyn.finite_time_average(H, psi, dec, 0, 10.0)
    assert r.exact_limit is None


def test_batched_limit_matches_scalar():
    H, psi, dec = instance(30, (2, 4))
    e = projector_elements(dec, 1, H.spectral)
    p = np.abs(H.spectral.coefficients(psi)) ** 2
    assert dyn.exact_limit_from_elements(p, e, 4, 6) == pytest.approx(dyn.exact_limit_f(H, psi, dec, 1))


# ------------------------------------------------------------ time fraction

def test_time_fraction_bound():
    assert dyn.time_fraction_bound(0.0, 0.3) == 1.0
    assert dyn.time_fraction_bound(0.01, 0.1) == pytest.approx(0.9)
    assert dyn.time_fraction_bound(0.2, 0.1) == 0.0
    with pytest.raises(InvalidParams):
        dyn.time_fraction_bound(0.1, 0.0)


# --------------------------------------------------------------------- GUE

def test_gue_properties():
    H = dyn.sample_gue(1, 6)
    assert np.abs(H.matrix - H.matrix.conj().T).max() <= 1e-14
    with pytest.raises(InvalidParams):
        dyn.sample_gue(1, 1)


def test_gue_two_level_repulsion():
    rng = SeedSpec(2).generator()
    for _ in range(10_000):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        h = 0.5 * (a + a.conj().T)
        w = np.linalg.eigvalsh(h)
        assert w[1] - w[0] > 1e-12 * max(abs(w).max(), 1.0)
    for k in range(200):
        H = dyn.sample_gue(rng, 2, tol=1e-12)
        assert H.nondegenerate


def test_gue_D8_nonresonant():
    rng = SeedSpec(3).generator()
    for _ in range(100):
        H = dyn.sample_gue(rng, 8)
        assert H.nonresonant
        assert nr_brute_force(H.spectral.eigenvalues, 1e-9) == (True, True)


# -------------------------------------------------------------- experiments

def test_fixed_state_vacuous_threshold():
    profile = DimensionProfile([8, 8])
    H, psi, _ = instance(40, (8, 8))
    delta = dp = 0.5
    eps = math.sqrt((16 - 1) * 8 / (delta * dp * 16 * 17)) * 1.01
    assert dyn.fixed_state_threshold(eps, delta, dp, 2, 16) < 1
    res = dyn.fixed_state_experiment(SeedSpec(41), profile, H, psi, eps, delta, dp, 500)
    assert res.hypothesis_met and res.passed
    assert res.fraction >= 1 - delta - 4 * res.std_error


def test_fixed_state_D20():
    profile = DimensionProfile([10, 10])
    H, psi, _ = instance(42, (10, 10))
    res = dyn.fixed_state_experiment(SeedSpec(43), profile, H, psi, 1.0, 0.5, 0.5, 1000,
                                     times=np.linspace(0, 50, 11))
    assert res.hypothesis_met and res.passed
    assert 0 <= res.extras["sampled_time_fraction_mean"] <= 1


def test_fixed_state_hypothesis_and_override():
    profile = DimensionProfile([10, 10])
    H, psi, _ = instance(44, (10, 10))
    with pytest.raises(HypothesisViolated):
        dyn.fixed_state_experiment(SeedSpec(1), profile, H, psi, 0.1, 0.5, 0.5, 10)
    res = dyn.fixed_state_experiment(SeedSpec(1), profile, H, psi, 0.1, 0.5, 0.5, 10, override=True)
    assert not res.hypothesis_met


def test_fixed_state_resonant_path_matches_closed_form():
    # integer spacings are resonant; the expansion route must still give the true limit
    profile = DimensionProfile([2, 2])
    H = dyn.Hamiltonian.diagonal([0.0, 1.0, 2.0, 4.0])
    psi = sample_unit_state(SeedSpec(5), 4)
    res = dyn.fixed_state_experiment(SeedSpec(6), profile, H, psi, 5.0, 0.5, 0.5, 8)
    frames = __import__("qet.haar", fromlist=["haar_frames"]).haar_frames(SeedSpec(6).generator(0, 0), 4, 4, 8)
    for k, u in enumerate(frames):
        dec = Decomposition(u, profile)
        T = 2e5
        vals = [dyn.finite_time_average(H, psi, dec, nu, T).finite_time_value for nu in range(2)]
        gamma = 25.0 * np.array([2, 2]) / 8
        assert res.time_fractions[k] == pytest.approx(max(0.0, 1 - sum(np.array(vals) / gamma)), abs=1e-4)


def test_worker_count_does_not_change_results():
    profile = DimensionProfile([3, 3])
    H, psi, _ = instance(45, (3, 3))
    a = dyn.fixed_state_experiment(SeedSpec(7), profile, H, psi, 3.0, 0.5, 0.5, 300, workers=1)
    b = dyn.fixed_state_experiment(SeedSpec(7), profile, H, psi, 3.0, 0.5, 0.5, 300, workers=3)
    assert np.array_equal(a.time_fractions, b.time_fractions)


def test_all_states_window_and_override():
    profile = DimensionProfile([10, 10])
    H = dyn.sample_gue(46, 20)
    with pytest.raises(HypothesisViolated):
        dyn.all_states_experiment(SeedSpec(8), profile, H, 1.0, 0.5, 0.5, 10, 5)
    res = dyn.all_states_experiment(SeedSpec(8), profile, H, 1.0, 0.5, 0.5, 200, 10, override=True)
    assert not res.hypothesis_met
    assert res.extras["f_le_g_violations"] == 0
    assert res.passed


def test_all_states_single_state_matches_uniform_thresholds():
    profile = DimensionProfile([4, 4])
    H = dyn.sample_gue(47, 8)
    res = dyn.all_states_experiment(SeedSpec(9), profile, H, 2.0, 0.5, 0.5, 50, 1, override=True)
    assert res.time_fractions.shape == (50,)
    assert res.extras["f_le_g_violations"] == 0


def test_all_states_requires_nonresonant():
    H = dyn.Hamiltonian.diagonal([0.0, 1.0, 2.0, 4.0])
    with pytest.raises(ResonantSpectrum):
        dyn.all_states_experiment(SeedSpec(1), DimensionProfile([2, 2]), H, 1.0, 0.5, 0.5, 5, 2, override=True)
