"""Tail probabilities of projector matrix elements and their analytic bounds.

For a Haar-random decomposition and fixed orthonormal vectors,

* the diagonal element ``e_aa = |P phi_a|^2`` follows Beta(d, D - d);
* ``I(d, D, a) = Prob[(e_aa - d/D)^2 >= a]``;
* ``J(d, D, a) = Prob[|e_ab|^2 >= a]`` for ``a != b``.

Both are evaluated by adaptive Gauss-Kronrod quadrature of log-space
integrands, so ``D`` in the thousands causes no overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, InvalidDims, InvalidParams
from .haar import DimensionProfile, g_parts, haar_frames
from .parallel import map_chunks
from .quadrature import log_space_integral, peak_breaks
from .rng import SeedSpec

THETA = 11.0 / 12.0
DEFAULT_C = 5.0
DEFAULT_C0 = 576.0
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-11
GNU_CHUNK = 256

_BETA, _OFFDIAG = 0, 1


@dataclass(frozen=True)
class TailQuery:
    d: int
    D: int
    a: float


@dataclass(frozen=True)
class TailResult:
    exact: float
    bound: float | None = None
    bound_hypotheses_met: bool = False
    quadrature_error_estimate: float = 0.0


@dataclass(frozen=True)
class Bound:
    value: float
    hypotheses_met: bool
    hypotheses: dict = field(default_factory=dict)


def _log_beta_norm(d, D):
    return math.lgamma(D) - math.lgamma(d) - math.lgamma(D - d)


def beta_density(d: int, D: int, v):
    """Beta(d, D - d) density, computed from log-gamma."""
    d, D = int(d), int(D)
    if not 1 <= d <= D - 1:
        raise InvalidDims(f"need 1 <= d <= D-1, got d={d}, D={D}")
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)
        log1mv = np.where(v < 1, np.log1p(-np.where(v < 1, v, 0.0)), -np.inf)
        lp = _log_beta_norm(d, D)
        lp = lp + (0.0 if d == 1 else (d - 1) * logv) + (0.0 if D - d == 1 else (D - d - 1) * log1mv)
    out = np.where((v >= 0) & (v <= 1), np.exp(lp), 0.0)
    return float(out) if out.ndim == 0 else out


def _beta_logf(d, D):
    lp = _log_beta_norm(d, D)

    def f(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return lp + (d - 1) * np.log(x) + (D - d - 1) * np.log1p(-x)
    return f


def beta_integral(d: int, D: int, lo: float, hi: float) -> tuple[float, float]:
    """``int_lo^hi`` of the Beta(d, D - d) density; returns (value, error)."""
    if hi <= lo:
        return 0.0, 0.0
    breaks = peak_breaks(_beta_logf(d, D), lo, hi)
    v, e, _ = log_space_integral(_BETA, (d, D - d, _log_beta_norm(d, D)), breaks,
                                 QUAD_EPSABS * 1e-2, QUAD_EPSREL)
    return v, e


def _check_query(q: TailQuery):
    d, D, a = int(q.d), int(q.D), float(q.a)
    if not math.isfinite(a) or a < 0:
        raise DomainViolation(f"threshold a must be finite and >= 0, got {a}")
    return d, D, a


def diag_tail_I(q: TailQuery) -> TailResult:
    """``Prob[(e_aa - d/D)^2 >= a]`` as a two-sided Beta tail integral.

    Domain: ``1 <= d <= D - 1``, ``sqrt(a) <= d/D`` and ``d/D + sqrt(a) <= 1``.
    """
    d, D, a = _check_query(q)
    if not 1 <= d <= D - 1:
        raise DomainViolation(f"need 1 <= d <= D-1, got d={d}, D={D}")
    m, s = d / D, math.sqrt(a)
    if s > m or m + s > 1:
        raise DomainViolation(f"sqrt(a)={s:.6g} outside the window allowed by d/D={m:.6g}")
    if a == 0:
        return TailResult(1.0)
    lv, le = beta_integral(d, D, 0.0, m - s)
    rv, re = beta_integral(d, D, m + s, 1.0)
    return TailResult(min(1.0, max(0.0, lv + rv)), quadrature_error_estimate=le + re)


def _offdiag_params(d, D, a):
    return (d, D, a, _log_beta_norm(d, D))


def _offdiag_logf(d, D, a):
    lp = _log_beta_norm(d, D)

    def f(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            g = x * (1 - x) - a
            return np.where(g > 0, lp + (D - 2) * np.log(np.where(g > 0, g, 1.0))
                            - (D - d - 1) * np.log(x) - (d - 1) * np.log1p(-x), -np.inf)
    return f


def offdiag_tail_J(q: TailQuery) -> TailResult:
    """``Prob[|e_ab|^2 >= a]`` for ``a != b``; domain ``1 < d < D - 1``, ``0 <= a <= 1/4``."""
    d, D, a = _check_query(q)
    if not 1 < d < D - 1:
        raise DomainViolation(f"need 1 < d < D-1, got d={d}, D={D}")
    if a > 0.25:
        raise DomainViolation(f"need a <= 1/4, got {a}")
    if a == 0:
        return TailResult(1.0)
    if a == 0.25:
        return TailResult(0.0)
    r = math.sqrt(0.25 - a)
    lo, hi = 0.5 - r, 0.5 + r
    breaks = peak_breaks(_offdiag_logf(d, D, a), lo, hi)
    v, e, _ = log_space_integral(_OFFDIAG, _offdiag_params(d, D, a), breaks,
                                 QUAD_EPSABS * 1e-2, QUAD_EPSREL)
    return TailResult(min(1.0, max(0.0, v)), quadrature_error_estimate=e)


def bound_I_exponential(q: TailQuery, C: float = DEFAULT_C) -> Bound:
    """``(D / sqrt d) exp(-theta a D^2 / (2d))`` with its hypothesis window
    ``C log D < d < D/C`` and ``1/D < sqrt(a) < d/(8D)``."""
    d, D, a = _check_query(q)
    if d < 1 or D < 2:
        raise DomainViolation(f"need d >= 1 and D >= 2, got d={d}, D={D}")
    value = D / math.sqrt(d) * math.exp(-THETA * a * D * D / (2 * d))
    s = math.sqrt(a)
    dims_ok = C * math.log(D) < d < D / C
    a_ok = 1 / D < s < d / (8 * D)
    return Bound(value, dims_ok and a_ok, {"dims": dims_ok, "threshold": a_ok, "C": C})


def diag_point_threshold(d: int, D: int) -> float:
    return 8 * d * math.log(D) / (THETA * D * D)


def diag_point_bound(d: int, D: int) -> float:
    """The exponential I-bound evaluated at ``diag_point_threshold``: ``1 / (D^3 sqrt d)``."""
    return 1.0 / (D ** 3 * math.sqrt(d))


def diag_point_hypotheses(d: int, D: int, C0: float = DEFAULT_C0) -> bool:
    return C0 * math.log(D) < d < D / C0


def _check_J_bound(d, D, a):
    if not (1 < d and D > 2 * d + 2):
        raise DomainViolation(f"need 1 < d and D > 2d+2, got d={d}, D={D}")
    if not 0 <= a < 0.25:
        raise DomainViolation(f"need 0 <= a < 1/4, got {a}")


def bound_J(q: TailQuery) -> float:
    """``(1 - 4a)^(D - 3/2)``, which dominates J and is dominated by ``exp(-4a(D - 3/2))``."""
    d, D, a = _check_query(q)
    _check_J_bound(d, D, a)
    return math.exp((D - 1.5) * math.log1p(-4 * a))


def bound_J_exponential(q: TailQuery) -> float:
    d, D, a = _check_query(q)
    _check_J_bound(d, D, a)
    return math.exp(-4 * a * (D - 1.5))


def offdiag_point_threshold(D: int) -> float:
    return 0.75 * math.log(D) / D


def offdiag_point_bound(D: int) -> float:
    """``D^-3 exp(9 log D / (2D))``."""
    return D ** -3.0 * math.exp(9 * math.log(D) / (2 * D))


def _ratio_log_f(d, D, t):
    l1m, l1p = np.log1p(-t), np.log1p(t)
    return np.logaddexp((d + 1 - D) * l1m + (1 - d) * l1p, (d + 1 - D) * l1p + (1 - d) * l1m)


def ratio_monotonicity_check(d: int, D: int, grid: int = 10_000) -> bool:
    """True iff ``(1-t)^(d+1-D)(1+t)^(1-d) + (1+t)^(d+1-D)(1-t)^(1-d)`` is
    non-decreasing on ``grid`` interior points of (0, 1)."""
    d, D = int(d), int(D)
    if not (1 < d and D > 2 * d + 2):
        raise DomainViolation(f"need 1 < d and D > 2d+2, got d={d}, D={D}")
    if grid < 2:
        raise InvalidParams("grid needs at least two points")
    t = np.arange(1, grid + 1) / (grid + 1)
    lf = _ratio_log_f(d, D, t)
    # allow round-off of a few ulps in log space
    return bool(np.all(np.diff(lf) >= -1e-12 * np.maximum(1.0, np.abs(lf[1:]))))


def remark_split_bound(r: float, a: float, tail_prob: float) -> float:
    """``r * Prob[g >= a] + a``, an upper bound for ``int g`` whenever ``0 <= g <= r``."""
    if not (0 <= a <= 1) or r < 0 or not (0 <= tail_prob <= 1):
        raise InvalidParams("need 0 <= a <= 1, r >= 0 and 0 <= tail_prob <= 1")
    return r * tail_prob + a


def diag_integral_bound(d: int, D: int) -> float:
    return 9 * d * math.log(D) / D ** 2


def offdiag_integral_bound(D: int) -> float:
    return math.log(D) / D


def gnu_integral_bound(D: int) -> float:
    return 10 * math.log(D) / D


@dataclass(frozen=True)
class GnuIntegral:
    mc_integral: float
    std_error: float
    diag_mc: float
    diag_std_error: float
    offdiag_mc: float
    offdiag_std_error: float
    diag_integral_bound: float
    offdiag_integral_bound: float
    gnu_integral_bound: float
    diag_hypotheses_met: bool
    offdiag_hypotheses_met: bool
    gnu_hypotheses_met: bool | None
    n_mc: int


def _mean_se(x):
    n = x.shape[0]
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan


def g_nu_samples(seed: SeedSpec, profile: DimensionProfile, nu: int, n: int, workers=None):
    """Haar samples of the two parts of ``g_nu``; the eigenbasis is taken to be
    the standard basis, which loses nothing by unitary invariance."""
    D, d = profile.D, profile.dims[nu]

    def chunk(gen, size):
        b = haar_frames(gen, D, d, size)
        e = b @ b.conj().transpose(0, 2, 1)
        off, dg = g_parts(e, d, D)
        return np.stack([off, dg], axis=1)

    out = np.concatenate(map_chunks(chunk, seed, n, chunk=GNU_CHUNK, workers=workers))
    return out[:, 0], out[:, 1]


def integral_bound_gnu(profile: DimensionProfile, nu: int, n_mc: int, seed: SeedSpec,
                       C0: float = DEFAULT_C0, C1: float | None = None, workers=None) -> GnuIntegral:
    """Monte Carlo of ``int g_nu`` over decompositions next to its analytic bounds.

    Hypothesis flags are data: the g_nu window depends on a constant with no
    known value, so its flag is ``None`` unless ``C1`` is supplied.
    """
    if n_mc < 2:
        raise InvalidParams("need at least two samples")
    D, d = profile.D, profile.dims[nu]
    off, dg = g_nu_samples(seed, profile, nu, n_mc, workers)
    m, se = _mean_se(off + dg)
    dm, dse = _mean_se(dg)
    om, ose = _mean_se(off)
    logD = math.log(D)
    h_diag = C0 * logD < d < D / C0
    h_off = 3 < d and D > 2 * d + 2 and logD / D < 0.2
    h_gnu = None if C1 is None else bool(C1 * logD < d < D / C1)
    return GnuIntegral(m, se, dm, dse, om, ose, diag_integral_bound(d, D), offdiag_integral_bound(D), gnu_integral_bound(D),
                       h_diag, h_off, h_gnu, int(n_mc))


def element_samples(seed: SeedSpec, d: int, D: int, n: int, workers=None):
    """Haar samples of ``(e_11, |e_12|^2)`` for one block of dimension ``d``.

    The two fixed vectors are the first two standard basis vectors.
    """
    def chunk(gen, size):
        b = haar_frames(gen, D, d, size)
        diag = np.sum(np.abs(b[:, 0, :]) ** 2, axis=1)
        off = np.abs(np.sum(b[:, 0, :].conj() * b[:, 1, :], axis=1)) ** 2
        return np.stack([diag, off], axis=1)

    out = np.concatenate(map_chunks(chunk, seed, n, workers=workers))
    return out[:, 0], out[:, 1]
