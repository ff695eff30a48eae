"""Numerical integration helpers shared by the tail and dynamics modules."""
from __future__ import annotations

import numpy as np

from . import _kernels

GK_LIMIT = 2000


def log_space_integral(kind: int, params, breaks, epsabs: float = 1e-14, epsrel: float = 1e-11):
    """Adaptive Gauss-Kronrod (10/21) of ``exp(log_integrand)`` over sorted breakpoints.

    ``kind`` selects the compiled log-integrand. Returns ``(value, error, status)``.
    """
    breaks = np.unique(np.asarray(breaks, dtype=np.float64))
    if breaks.size < 2:
        return 0.0, 0.0, 0
    params = np.asarray(params, dtype=np.float64)
    v, e, s = _kernels.gk_log_integral(int(kind), params, breaks, float(epsabs), float(epsrel), GK_LIMIT)
    return float(v), float(e), int(s)


def peak_breaks(logf, lo: float, hi: float, n: int = 4097) -> np.ndarray:
    """Breakpoints clustered around the maximum of a log-integrand on [lo, hi].

    Sharp peaks of high-dimensional Beta-like integrands are easy to miss with
    a handful of panels; splitting at ``mode +- k * width`` keeps the adaptive
    rule honest.
    """
    x = np.linspace(lo, hi, n)
    y = logf(x)
    if not np.any(np.isfinite(y)):
        return np.array([lo, hi])
    i = int(np.nanargmax(np.where(np.isfinite(y), y, -np.inf)))
    mode = x[i]
    h = x[1] - x[0]
    width = h
    if 0 < i < n - 1 and np.all(np.isfinite(y[i - 1:i + 2])):
        curv = (y[i - 1] - 2 * y[i] + y[i + 1]) / (h * h)
        if curv < 0:
            width = max(h, 1.0 / np.sqrt(-curv))
    pts = [lo, hi, mode]
    for k in (0.5, 1, 2, 4, 8, 16, 32):
        pts += [mode - k * width, mode + k * width]
    pts = np.clip(np.array(pts), lo, hi)
    return np.unique(pts)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 50,
                     initial_panels: int = 64):
    """Adaptive Simpson for a vectorised ``f``; refines all open panels level by level.

    Returns ``(integral, error_estimate)``.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = f(lo), f(mid), f(hi)
    whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
    ptol = np.full(lo.shape, tol / initial_panels)
    total = 0.0
    err = 0.0
    for _ in range(max_depth):
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * frm + fhi)
        diff = left + right - whole
        done = np.abs(diff) <= 15 * ptol
        total += float(np.sum((left + right + diff / 15)[done]))
        err += float(np.sum(np.abs(diff[done]) / 15))
        keep = ~done
        if not np.any(keep):
            return total, err
        lo, mid, hi = (np.concatenate([lo[keep], mid[keep]]), np.concatenate([lm[keep], rm[keep]]),
                       np.concatenate([mid[keep], hi[keep]]))
        flo, fmid, fhi = (np.concatenate([flo[keep], fmid[keep]]), np.concatenate([flm[keep], frm[keep]]),
                          np.concatenate([fmid[keep], fhi[keep]]))
        whole = np.concatenate([left[keep], right[keep]])
        ptol = np.concatenate([ptol[keep], ptol[keep]]) / 2
    total += float(np.sum(whole))
    err += float(np.sum(np.abs(whole))) * 1e-3
    return total, err
