"""Closed-form overlap moments and their Monte Carlo estimators.

Closed forms return :class:`fractions.Fraction`, so identities such as
``variance == fourth_moment - mean**2`` hold exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import HypothesisViolated, InvalidDims, InvalidParams
from .haar import DimensionProfile, haar_frames, unit_states
from .parallel import mean_and_stderr, sample_concat
from .rng import SeedSpec


@dataclass(frozen=True)
class MomentReport:
    closed_form: float
    mc_estimate: float
    mc_std_error: float
    n_samples: int


def _dims(d, D):
    d, D = int(d), int(D)
    if not 1 <= d <= D:
        raise InvalidDims(f"need 1 <= d <= D, got d={d}, D={D}")
    return d, D


def sphere_mean(d: int, D: int) -> Fraction:
    d, D = _dims(d, D)
    return Fraction(d, D)


def sphere_variance(d: int, D: int) -> Fraction:
    d, D = _dims(d, D)
    return Fraction(d * (D - d), D * D * (D + 1))


def sphere_fourth_moment(d: int, D: int, field: str = "complex") -> Fraction:
    """``E |P phi|^4`` on the unit sphere of C^D (or R^n with ``field='real'``)."""
    d, D = _dims(d, D)
    if field == "complex":
        return Fraction(d * d + d, D * (D + 1))
    if field == "real":
        return Fraction(d * d + 2 * d, D * (D + 2))
    raise InvalidParams(f"field must be 'complex' or 'real', got {field!r}")


def overlap_samples(seed: SeedSpec, profile: DimensionProfile, nu: int, n: int,
                    mode: str = "vary-state", **kw) -> np.ndarray:
    """Samples of ``|P_nu phi|^2``.

    ``vary-state``: standard-basis decomposition fixed, phi Haar-random.
    ``vary-decomposition``: phi = e_1 fixed, decomposition Haar-random; by
    symmetry of the Haar law only the d_nu columns of block nu are drawn.
    """
    D = profile.D
    sl = profile.block(nu)
    d = profile.dims[nu]
    if mode == "vary-state":
        def chunk(gen, size):
            x = unit_states(gen, D, size)[:, sl]
            return np.sum(x.real ** 2 + x.imag ** 2, axis=1)
    elif mode == "vary-decomposition":
        def chunk(gen, size):
            row = haar_frames(gen, D, d, size)[:, 0, :]
            return np.sum(row.real ** 2 + row.imag ** 2, axis=1)
    else:
        raise InvalidParams(f"unknown mode {mode!r}")
    return sample_concat(chunk, seed, n, **kw)


def mc_overlap_moment(seed: SeedSpec, profile: DimensionProfile, nu: int, power: int,
                      n: int, mode: str = "vary-state", **kw) -> MomentReport:
    if power not in (1, 2):
        raise InvalidParams("power must be 1 or 2")
    if n < 2:
        raise InvalidParams("need at least two samples")
    d, D = profile.dims[nu], profile.D
    closed = sphere_mean(d, D) if power == 1 else sphere_fourth_moment(d, D)
    x = overlap_samples(seed, profile, nu, n, mode, **kw) ** power
    mean, se = mean_and_stderr(x)
    return MomentReport(float(closed), mean, se, int(n))


def generic_dimension_threshold(eps: float, delta: float, N: int, D: int) -> float:
    """Lower bound that every d_nu must exceed for (1-delta)-generic equidistribution."""
    if not eps > 0:
        raise InvalidParams("eps must be positive")
    if not 0 < delta <= 1:
        raise InvalidParams("delta must lie in (0, 1]")
    if N < 2 or D < N:
        raise InvalidParams(f"need N >= 2 and D >= N, got N={N}, D={D}")
    return D - eps * eps * delta * D * (D + 1) / (N * N)


def gos_empirical_check(seed: SeedSpec, profile: DimensionProfile, eps: float, delta: float,
                        n: int, phi=None, override: bool = False, **kw) -> float:
    """Fraction of Haar decompositions on which every block satisfies
    ``| |P_nu phi|^2 - d_nu/D | < eps sqrt(d_nu / (D N))``.
    """
    D, N = profile.D, profile.N
    thr = generic_dimension_threshold(eps, delta, N, D)
    bad = [nu for nu, d in enumerate(profile.dims) if not d > thr]
    if bad and not override:
        raise HypothesisViolated(
            f"blocks {bad} have d_nu <= {thr:.6g}",
            {"threshold": thr, "blocks": bad},
        )
    dims = np.array(profile.dims, dtype=float)
    tol = eps * np.sqrt(dims / (D * N))
    phi = np.eye(D, dtype=np.complex128)[0] if phi is None else np.asarray(phi, dtype=np.complex128)

    def chunk(gen, size):
        u = haar_frames(gen, D, D, size)
        amp = np.einsum("i,bij->bj", phi.conj(), u)
        p = np.abs(amp) ** 2
        w = np.stack([p[:, profile.block(nu)].sum(axis=1) for nu in range(N)], axis=1)
        return np.all(np.abs(w - dims / D) < tol, axis=1).astype(float)

    hits = sample_concat(chunk, seed, n, **kw)
    return float(np.mean(hits))
