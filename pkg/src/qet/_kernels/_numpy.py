"""Pure-numpy twins of the kernels in ``_numba.py``.

Same algorithms, vectorised over whatever axis is available (the batch axis
for QR, rows for the eigensolver, the 21 nodes for quadrature).
"""
import math

import numpy as np

from ._gk import GK_NODES, GK_WEIGHTS_G, GK_WEIGHTS_K


def qr_batch(a):
    a = np.asarray(a, dtype=np.complex128)
    n, m, k = a.shape
    work = a.copy()
    vs = np.zeros((n, m, k), dtype=np.complex128)
    betas = np.zeros((n, k))
    for j in range(k):
        x = work[:, j:, j]
        nrm = np.sqrt(np.sum(x.real ** 2 + x.imag ** 2, axis=1))
        x0 = x[:, 0]
        ax0 = np.abs(x0)
        phase = np.where(ax0 > 0, x0 / np.where(ax0 > 0, ax0, 1.0), 1.0)
        v = x.copy()
        v[:, 0] -= -phase * nrm
        vnorm2 = np.sum(v.real ** 2 + v.imag ** 2, axis=1)
        ok = vnorm2 > 0
        beta = np.where(ok, 2.0 / np.where(ok, vnorm2, 1.0), 0.0)
        vs[:, j:, j] = v
        betas[:, j] = beta
        s = np.einsum("bi,bic->bc", v.conj(), work[:, j:, j:]) * beta[:, None]
        work[:, j:, j:] -= v[:, :, None] * s[:, None, :]
    q = np.zeros((n, m, k), dtype=np.complex128)
    q[:, np.arange(k), np.arange(k)] = 1.0
    for j in range(k - 1, -1, -1):
        v = vs[:, j:, j]
        s = np.einsum("bi,bic->bc", v.conj(), q[:, j:, :]) * betas[:, j, None]
        q[:, j:, :] -= v[:, :, None] * s[:, None, :]
    r = np.triu(work[:, :k, :k])
    diag = np.diagonal(r, axis1=1, axis2=2)
    adiag = np.abs(diag)
    ph = np.where(adiag > 0, diag / np.where(adiag > 0, adiag, 1.0), 1.0)
    q *= ph[:, None, :]
    r *= ph.conj()[:, :, None]
    idx = np.arange(k)
    r[:, idx, idx] = adiag
    return q, r


def _tqli(d, e, z, max_iter):
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return 1
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = z[:, i].copy()
                z[:, i] = c * zi - s * z[:, i + 1]
                z[:, i + 1] = s * zi + c * z[:, i + 1]
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def hermitian_eig(a, max_iter):
    A = np.array(a, dtype=np.complex128)
    n = A.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = A[k + 1:, k]
        nrm2 = float(np.sum(x.real ** 2 + x.imag ** 2))
        if nrm2 - abs(x[0]) ** 2 <= 0.0:
            continue
        nrm = math.sqrt(nrm2)
        ax0 = abs(x[0])
        phase = x[0] / ax0 if ax0 > 0 else 1.0
        v = np.zeros(n, dtype=np.complex128)
        v[k + 1:] = x
        v[k + 1] -= -phase * nrm
        tau = 2.0 / float(np.sum(v.real ** 2 + v.imag ** 2))
        p = A @ v
        K = float(np.real(np.vdot(v, p)))
        w = tau * p - 0.5 * tau * tau * K * v
        A -= np.outer(v, w.conj()) + np.outer(w, v.conj())
        Q -= tau * np.outer(Q @ v, v.conj())
    d = np.real(np.diagonal(A)).copy()
    off = np.diagonal(A, -1)
    aoff = np.abs(off)
    e = np.zeros(n)
    e[:-1] = aoff
    steps = np.where(aoff > 0, off / np.where(aoff > 0, aoff, 1.0), 1.0)
    sph = np.concatenate([[1.0 + 0.0j], np.cumprod(steps)])
    Q *= sph[None, :n]
    status = _tqli(d, e, Q, max_iter)
    return d, Q, status


def _log_integrand(kind, x, params):
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            p, q, out = params
            val = np.full_like(x, out)
            if p != 1.0:
                val = val + (p - 1.0) * np.log(x)
            if q != 1.0:
                val = val + (q - 1.0) * np.log1p(-x)
            return np.where(np.isnan(val), -np.inf, val)
        d, D, a, lognorm = params
        g = x * (1.0 - x) - a
        inside = (g > 0) & (x > 0) & (x < 1)
        val = (lognorm + (D - 2.0) * np.log(np.where(inside, g, 1.0))
               - (D - d - 1.0) * np.log(np.where(inside, x, 0.5))
               - (d - 1.0) * np.log1p(-np.where(inside, x, 0.5)))
        return np.where(inside, val, -np.inf)


def _gk_rule(kind, params, lo, hi):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    fx = np.exp(_log_integrand(kind, c + h * GK_NODES, params))
    resk = float(GK_WEIGHTS_K @ fx)
    resg = float(GK_WEIGHTS_G @ fx)
    return resk * h, abs((resk - resg) * h)


def gk_log_integral(kind, params, breaks, epsabs, epsrel, limit):
    params = tuple(float(p) for p in params)
    intervals = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi > lo:
            v, er = _gk_rule(kind, params, float(lo), float(hi))
            intervals.append([float(lo), float(hi), v, er])
    cap = limit + len(breaks)
    status = 0
    while intervals:
        total = sum(iv[2] for iv in intervals)
        toterr = sum(iv[3] for iv in intervals)
        if toterr <= max(epsabs, epsrel * abs(total)):
            break
        if len(intervals) >= cap:
            status = 1
            break
        worst = max(range(len(intervals)), key=lambda i: intervals[i][3])
        lo, hi = intervals[worst][:2]
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            status = 2
            break
        v1, e1 = _gk_rule(kind, params, lo, mid)
        v2, e2 = _gk_rule(kind, params, mid, hi)
        intervals[worst] = [lo, mid, v1, e1]
        intervals.append([mid, hi, v2, e2])
    intervals.sort(key=lambda iv: iv[0])
    total = 0.0
    toterr = 0.0
    for iv in intervals:
        total += iv[2]
        toterr += iv[3]
    return total, toterr, status


def time_average_sum(freqs, coeffs, T, chunk=512):
    freqs = np.asarray(freqs, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    total = 0.0
    for s in range(0, freqs.shape[0], chunk):
        x = 0.5 * (freqs[s:s + chunk, None] + freqs[None, :]) * T
        # sin(x)/x with the removable singularity at 0
        sinc = np.sinc(x / np.pi)
        avg = np.exp(1j * x) * sinc
        total += float(np.real(coeffs[s:s + chunk] @ (avg @ coeffs)))
    return total
