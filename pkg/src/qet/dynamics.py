"""Schrodinger evolution, time averages of block weights and the equilibration experiments.

Conventions: ``psi_t = sum_a c_a exp(-i t E_a) phi_a`` with ``c_a = <phi_a, psi_0>``,
and ``e[a, b] = <phi_a, P_nu phi_b>``. Then

    |P_nu psi_t|^2 = sum_{a,b} conj(c_a) c_b e[a, b] exp(i t (E_a - E_b)),

a trigonometric polynomial with D^2 terms; squaring the centred weight gives
the (D^2 + 1)^2-term expansion that the time averages integrate exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (ExpansionTooLarge, HypothesisViolated, InvalidParams,
                     ResonantSpectrum, ShapeMismatch)
from .haar import Decomposition, DimensionProfile, g_parts, haar_frames, unit_states
from .linalg import SpectralData, hermitian_eigendecomposition
from .parallel import map_chunks
from .quadrature import adaptive_simpson
from .rng import SeedSpec, as_generator, complex_normal

DEFAULT_NR_TOL = 1e-9
DEFAULT_TERM_CAP = 2**20
FREQ_MERGE_RTOL = 1e-11
LIMIT_SLACK = 1e-12
EXPERIMENT_CHUNK = 128


@dataclass(frozen=True)
class NRCheck:
    nondegenerate: bool
    nonresonant: bool
    witness: tuple[int, ...] | None = None


def check_nr(spectral, tol: float = DEFAULT_NR_TOL) -> NRCheck:
    """Degeneracy and resonance test on a sorted spectrum.

    Two eigenvalues (or two positive gaps) closer than ``tol * (E_max - E_min)``
    count as equal. Witnesses use 1-based labels: ``(a, b)`` for a repeated
    eigenvalue, ``(a, b, a', b')`` for ``E_a - E_b = E_a' - E_b'``.
    """
    E = np.asarray(spectral.eigenvalues if isinstance(spectral, SpectralData) else spectral, dtype=float)
    if np.any(np.diff(E) < 0):
        raise InvalidParams("eigenvalues must be sorted ascending")
    n = E.shape[0]
    if n < 2:
        return NRCheck(True, True, None)
    scale = tol * (E[-1] - E[0])
    gaps = np.diff(E)
    small = np.nonzero(gaps <= scale)[0]
    if small.size:
        i = int(small[0])
        return NRCheck(False, False, (i + 1, i + 2))
    a_idx, b_idx = np.tril_indices(n, -1)
    diffs = E[a_idx] - E[b_idx]
    order = np.argsort(diffs, kind="stable")
    sd = diffs[order]
    close = np.nonzero(np.diff(sd) <= scale)[0]
    if close.size:
        k = int(close[0])
        i, j = order[k], order[k + 1]
        return NRCheck(True, False, (int(a_idx[i]) + 1, int(b_idx[i]) + 1,
                                     int(a_idx[j]) + 1, int(b_idx[j]) + 1))
    return NRCheck(True, True, None)


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    spectral: SpectralData
    nondegenerate: bool
    nonresonant: bool
    tolerance: float
    witness: tuple[int, ...] | None = None

    @classmethod
    def from_matrix(cls, m, tol: float = DEFAULT_NR_TOL) -> "Hamiltonian":
        m = np.array(m, dtype=np.complex128)
        sd = hermitian_eigendecomposition(m)
        chk = check_nr(sd, tol)
        m.flags.writeable = False
        return cls(m, sd, chk.nondegenerate, chk.nonresonant, tol, chk.witness)

    @classmethod
    def diagonal(cls, energies, tol: float = DEFAULT_NR_TOL) -> "Hamiltonian":
        return cls.from_matrix(np.diag(np.asarray(energies, dtype=float)), tol)

    @property
    def dim(self) -> int:
        return self.spectral.dim


def sample_gue(rng, D: int, tol: float = DEFAULT_NR_TOL) -> Hamiltonian:
    """GUE matrix ``(A + A^*)/2`` with A complex Ginibre; exactly Hermitian."""
    if D < 2:
        raise InvalidParams("GUE sampling needs D >= 2")
    a = complex_normal(as_generator(rng), (D, D))
    return Hamiltonian.from_matrix(0.5 * (a + a.conj().T), tol)


def evolve(H: Hamiltonian, psi0, t: float) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if psi0.shape != (H.dim,):
        raise ShapeMismatch(f"state shape {psi0.shape} for D={H.dim}")
    if t == 0:
        return psi0.copy()
    sd = H.spectral
    c = sd.coefficients(psi0)
    return sd.eigenvectors @ (np.exp(-1j * t * sd.eigenvalues) * c)


def evolve_many(H: Hamiltonian, psi0, times) -> np.ndarray:
    """Rows are ``psi_t`` for each ``t`` in ``times``."""
    sd = H.spectral
    c = sd.coefficients(np.asarray(psi0, dtype=np.complex128))
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, sd.eigenvalues)) * c
    return phases @ sd.eigenvectors.T


def _elements(H: Hamiltonian, psi0, dec: Decomposition, nu: int):
    sd = H.spectral
    if dec.profile.D != sd.dim:
        raise ShapeMismatch(f"decomposition D={dec.profile.D} vs Hamiltonian D={sd.dim}")
    x = dec.basis(nu).conj().T @ sd.eigenvectors
    e = x.conj().T @ x
    c = sd.coefficients(np.asarray(psi0, dtype=np.complex128))
    return e, c


def _linear_terms(H, psi0, dec, nu):
    """Frequencies and coefficients of ``|P_nu psi_t|^2 - d_nu/D``."""
    e, c = _elements(H, psi0, dec, nu)
    E = H.spectral.eigenvalues
    amp = np.conj(c)[:, None] * c[None, :] * e
    freqs = np.concatenate([(E[:, None] - E[None, :]).ravel(), [0.0]])
    coeffs = np.concatenate([amp.ravel(), [-dec.profile.dims[nu] / dec.profile.D]])
    return freqs, coeffs


def _freq_scale(H) -> float:
    E = H.spectral.eigenvalues
    return max(float(E[-1] - E[0]), float(np.max(np.abs(E))), np.finfo(float).tiny)


@dataclass(frozen=True)
class FourierExpansion:
    """``(|P_nu psi_t|^2 - d_nu/D)^2 = sum_w L_w exp(i u_w t)`` with equal
    frequencies (to a relative ``FREQ_MERGE_RTOL``) merged."""

    frequencies: np.ndarray
    coefficients: np.ndarray
    zero_tol: float

    @property
    def M(self) -> int:
        return int(self.frequencies.shape[0])

    @property
    def limit(self) -> float:
        z = np.abs(self.frequencies) <= self.zero_tol
        return float(np.real(np.sum(self.coefficients[z])))

    @property
    def min_nonzero_freq(self) -> float:
        nz = np.abs(self.frequencies)[np.abs(self.frequencies) > self.zero_tol]
        return float(nz.min()) if nz.size else math.inf

    def average(self, T: float) -> float:
        x = 0.5 * self.frequencies * T
        return float(np.real(np.sum(self.coefficients * np.exp(1j * x) * np.sinc(x / np.pi))))


def _check_cap(D, term_cap):
    K = D * D + 1
    if K * K > term_cap:
        raise ExpansionTooLarge(f"expansion has {K * K} terms, cap is {term_cap}")


def fourier_expansion(H: Hamiltonian, psi0, dec: Decomposition, nu: int,
                      term_cap: int = DEFAULT_TERM_CAP) -> FourierExpansion:
    _check_cap(H.dim, term_cap)
    f, a = _linear_terms(H, psi0, dec, nu)
    u = (f[:, None] + f[None, :]).ravel()
    L = (a[:, None] * a[None, :]).ravel()
    order = np.argsort(u, kind="stable")
    u, L = u[order], L[order]
    tol = FREQ_MERGE_RTOL * _freq_scale(H)
    starts = np.concatenate([[0], np.nonzero(np.diff(u) > tol)[0] + 1])
    freqs = np.add.reduceat(u, starts) / np.diff(np.concatenate([starts, [u.size]]))
    coeffs = np.add.reduceat(L, starts)
    return FourierExpansion(freqs, coeffs, tol)


@dataclass(frozen=True)
class TimeAverageReport:
    nu: int
    T: float
    finite_time_value: float
    exact_limit: float | None
    convergence_bound: float
    method: str = "fourier"
    quadrature_error: float | None = None


def exact_limit_from_elements(p, e, d: int, D: int):
    """Long-time average of ``(|P psi_t|^2 - d/D)^2`` under a non-resonant spectrum.

    ``p`` holds the populations ``|c_a|^2`` (shape (..., D)), ``e`` the
    projector elements (..., D, D). Broadcasts over leading axes.
    """
    p = np.asarray(p, dtype=float)
    e = np.asarray(e)
    diag = np.real(np.diagonal(e, axis1=-2, axis2=-1))
    mag = np.abs(e) ** 2
    off = np.einsum("...a,...ab,...b->...", p, mag, p) - np.sum(p * p * diag * diag, axis=-1)
    centre = np.sum(p * diag, axis=-1) - d / D
    return off + centre * centre


def exact_limit_f(H: Hamiltonian, psi0, dec: Decomposition, nu: int) -> float:
    if not H.nonresonant:
        raise ResonantSpectrum(f"spectrum fails the non-resonance check (witness {H.witness})")
    e, c = _elements(H, psi0, dec, nu)
    p = np.abs(c) ** 2
    return float(exact_limit_from_elements(p, e, dec.profile.dims[nu], dec.profile.D))


def _integrand(H, psi0, dec, nu):
    b = dec.basis(nu)
    target = dec.profile.dims[nu] / dec.profile.D

    def f(t):
        amp = evolve_many(H, psi0, t) @ b.conj()
        w = np.sum(np.abs(amp) ** 2, axis=1)
        return (w - target) ** 2
    return f


def finite_time_average(H: Hamiltonian, psi0, dec: Decomposition, nu: int, T: float,
                        term_cap: int = DEFAULT_TERM_CAP, on_overflow: str = "raise",
                        quad_tol: float = 1e-10) -> TimeAverageReport:
    """``(1/T) int_0^T (|P_nu psi_t|^2 - d_nu/D)^2 dt``.

    Computed exactly from the Fourier expansion. The error bound is
    ``4 M / (T min|u_w|)`` over the merged non-zero frequencies. Past the term
    cap either raise :class:`ExpansionTooLarge` or, with
    ``on_overflow='quadrature'``, integrate numerically and report the
    quadrature error instead of a Fourier bound.
    """
    if not T > 0:
        raise InvalidParams("T must be positive")
    limit = exact_limit_f(H, psi0, dec, nu) if H.nonresonant else None
    try:
        _check_cap(H.dim, term_cap)
    except ExpansionTooLarge:
        if on_overflow != "quadrature":
            raise
        val, err = adaptive_simpson(_integrand(H, psi0, dec, nu), 0.0, float(T), tol=quad_tol * T)
        return TimeAverageReport(nu, float(T), val / T, limit, math.inf, "quadrature", err / T)
    f, a = _linear_terms(H, psi0, dec, nu)
    value = float(_kernels.time_average_sum(f, a, float(T)))
    exp = fourier_expansion(H, psi0, dec, nu, term_cap)
    mnz = exp.min_nonzero_freq
    bound = math.inf if math.isinf(mnz) else 4.0 * exp.M / (T * mnz)
    return TimeAverageReport(nu, float(T), value, limit, bound)


def time_fraction_bound(rho: float, gamma: float) -> float:
    """Long-run fraction of time with ``f(t) < gamma`` when ``f >= 0`` averages to ``rho``."""
    if not gamma > 0:
        raise InvalidParams("gamma must be positive")
    if rho < 0:
        raise InvalidParams("rho must be non-negative")
    return max(0.0, 1.0 - rho / gamma)


# ---------------------------------------------------------------- experiments

def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else math.nan


def fixed_state_threshold(eps, delta, delta_p, N, D) -> float:
    return D - eps * eps * delta * delta_p * D * (D + 1) / N ** 3


def main_window(eps, delta, delta_p, N, D, C1) -> tuple[float, float]:
    lo = max(C1, 10.0 * N ** 3 / (eps * delta * delta_p)) * math.log(D)
    return lo, D / C1


def _check_params(eps, delta, delta_p):
    if not eps > 0:
        raise InvalidParams("eps must be positive")
    for name, v in (("delta", delta), ("delta_prime", delta_p)):
        if not 0 < v <= 1:
            raise InvalidParams(f"{name} must lie in (0, 1]")


def _element_stack(frames, phi, profile):
    """Projector elements for every block of every frame: (n, N, D, D)."""
    x = np.einsum("bij,ik->bjk", frames.conj(), phi)
    out = []
    for nu in range(profile.N):
        xb = x[:, profile.block(nu), :]
        out.append(np.einsum("bja,bjc->bac", xb.conj(), xb))
    return np.stack(out, axis=1)


def _general_limits(H, psi0, frames, profile):
    lims = np.empty((frames.shape[0], profile.N))
    for i, u in enumerate(frames):
        dec = Decomposition(u, profile)
        for nu in range(profile.N):
            lims[i, nu] = fourier_expansion(H, psi0, dec, nu).limit
    return lims


@dataclass
class ExperimentResult:
    name: str
    hypothesis_met: bool
    hypothesis: dict
    n_dec: int
    target: float
    fraction: float
    std_error: float
    passed: bool
    time_fractions: np.ndarray = field(repr=False)
    extras: dict = field(default_factory=dict)


def fixed_state_experiment(seed: SeedSpec, profile: DimensionProfile, H: Hamiltonian, psi0,
                          eps: float, delta: float, delta_p: float, n_dec: int,
                          times=None, override: bool = False, workers=None) -> ExperimentResult:
    """Fixed initial state: fraction of Haar decompositions whose long-run
    time fraction (lower bound from the exact limit) reaches ``1 - delta_p``.
    """
    _check_params(eps, delta, delta_p)
    D, N = profile.D, profile.N
    if H.dim != D:
        raise ShapeMismatch(f"Hamiltonian D={H.dim} vs profile D={D}")
    psi0 = np.asarray(psi0, dtype=np.complex128)
    thr = fixed_state_threshold(eps, delta, delta_p, N, D)
    ok = all(d > thr for d in profile.dims)
    hyp = {"dimension_threshold": thr, "dims": list(profile.dims)}
    if not ok and not override:
        raise HypothesisViolated(f"need every d_nu > {thr:.6g}", hyp)
    dims = np.array(profile.dims, dtype=float)
    gamma = eps * eps * dims / (D * N)
    phi = H.spectral.eigenvectors
    p = np.abs(H.spectral.coefficients(psi0)) ** 2
    traj = evolve_many(H, psi0, times) if times is not None else None

    def chunk(gen, size):
        frames = haar_frames(gen, D, D, size)
        if H.nonresonant:
            e = _element_stack(frames, phi, profile)
            lims = np.stack([exact_limit_from_elements(p, e[:, nu], profile.dims[nu], D)
                             for nu in range(N)], axis=1)
        else:
            lims = _general_limits(H, psi0, frames, profile)
        out = [lims]
        if traj is not None:
            amp = np.einsum("ti,bij->btj", traj, frames.conj())
            w = np.stack([np.sum(np.abs(amp[:, :, profile.block(nu)]) ** 2, axis=2)
                          for nu in range(N)], axis=2)
            inside = np.all(np.abs(w - dims / D) < eps * np.sqrt(dims / (N * D)), axis=2)
            out.append(inside.mean(axis=1))
        return out

    parts = map_chunks(chunk, seed, n_dec, chunk=EXPERIMENT_CHUNK, workers=workers)
    lims = np.concatenate([q[0] for q in parts])
    tf = np.maximum(0.0, 1.0 - np.sum(lims / gamma, axis=1))
    hits = tf >= 1.0 - delta_p
    frac = float(np.mean(hits))
    se = _binomial_se(1.0 - delta, n_dec)
    extras = {"limits_mean": lims.mean(axis=0).tolist()}
    if traj is not None:
        sampled = np.concatenate([q[1] for q in parts])
        extras["sampled_time_fraction_mean"] = float(sampled.mean())
        extras["sampled_fraction"] = float(np.mean(sampled >= 1.0 - delta_p))
    return ExperimentResult("theorem-t1", ok, hyp, n_dec, 1.0 - delta, frac, se,
                            frac >= 1.0 - delta - 4.0 * se, tf, extras)


def all_states_experiment(seed: SeedSpec, profile: DimensionProfile, H: Hamiltonian,
                            eps: float, delta: float, delta_p: float, n_dec: int, n_states: int,
                            C1: float = 1.0, override: bool = False, workers=None) -> ExperimentResult:
    """Uniform-in-state version: worst case over ``n_states`` Haar states per
    decomposition, with the hard check ``f_nu(psi0, D) <= g_nu(D)`` on each."""
    _check_params(eps, delta, delta_p)
    if not H.nonresonant:
        raise ResonantSpectrum(f"spectrum fails the non-resonance check (witness {H.witness})")
    D, N = profile.D, profile.N
    if H.dim != D:
        raise ShapeMismatch(f"Hamiltonian D={H.dim} vs profile D={D}")
    lo, hi = main_window(eps, delta, delta_p, N, D, C1)
    ok = all(lo < d < hi for d in profile.dims)
    hyp = {"window_low": lo, "window_high": hi, "C1": C1, "dims": list(profile.dims)}
    if not ok and not override:
        raise HypothesisViolated(f"need {lo:.6g} < d_nu < {hi:.6g}", hyp)
    dims = np.array(profile.dims, dtype=float)
    gamma = eps * eps * dims / (D * N)
    phi = H.spectral.eigenvectors

    def chunk(gen, size):
        frames = haar_frames(gen, D, D, size)
        e = _element_stack(frames, phi, profile)
        off, dg = zip(*(g_parts(e[:, nu], profile.dims[nu], D) for nu in range(N)))
        g = np.stack(off, axis=1) + np.stack(dg, axis=1)
        states = unit_states(gen, D, size * n_states).reshape(size, n_states, D)
        p = np.abs(states @ phi.conj()) ** 2
        f = np.stack([exact_limit_from_elements(p, e[:, None, nu], profile.dims[nu], D)
                      for nu in range(N)], axis=2)
        return g, f.max(axis=1), np.sum(f > g[:, None, :] + LIMIT_SLACK), f.max() if f.size else 0.0

    parts = map_chunks(chunk, seed, n_dec, chunk=EXPERIMENT_CHUNK, workers=workers)
    g = np.concatenate([q[0] for q in parts])
    worst = np.concatenate([q[1] for q in parts])
    violations = int(sum(q[2] for q in parts))
    tf = np.maximum(0.0, 1.0 - np.sum(worst / gamma, axis=1))
    tf_uniform = np.maximum(0.0, 1.0 - np.sum(g / gamma, axis=1))
    frac = float(np.mean(tf >= 1.0 - delta_p))
    se = _binomial_se(1.0 - delta, n_dec)
    g_mean = g.mean(axis=0)
    g_se = g.std(axis=0, ddof=1) / math.sqrt(n_dec) if n_dec > 1 else np.full(N, math.nan)
    extras = {
        "f_le_g_violations": violations,
        "uniform_fraction": float(np.mean(tf_uniform >= 1.0 - delta_p)),
        "g_integral_mc": g_mean.tolist(),
        "g_integral_std_error": g_se.tolist(),
        "gnu_integral_bound": 10.0 * math.log(D) / D,
    }
    passed = frac >= 1.0 - delta - 4.0 * se and violations == 0
    return ExperimentResult("theorem-main", ok, hyp, n_dec, 1.0 - delta, frac, se, passed, tf, extras)

