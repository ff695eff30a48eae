"""Numba-compiled hot loops.

Every function here has a drop-in twin in ``_numpy.py`` with the same
signature and return convention; ``qet._kernels`` picks one at import time.
"""
import math

import numpy as np
from numba import njit

from ._gk import GK_NODES, GK_WEIGHTS_G, GK_WEIGHTS_K

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _qr_one(a, q, r, wt, vs, qt):
    # works on transposed copies so that every inner loop is contiguous
    m, k = a.shape
    for i in range(m):
        for c in range(k):
            wt[c, i] = a[i, c]
    for j in range(k):
        nrm2 = 0.0
        for i in range(j, m):
            nrm2 += wt[j, i].real ** 2 + wt[j, i].imag ** 2
        vs[j, :] = 0.0
        if nrm2 == 0.0:
            continue
        nrm = math.sqrt(nrm2)
        x0 = wt[j, j]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * nrm
        vnorm2 = 0.0
        for i in range(j, m):
            v = wt[j, i]
            if i == j:
                v = v - alpha
            vs[j, i] = v
            vnorm2 += v.real ** 2 + v.imag ** 2
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        for i in range(j, m):
            vs[j, i] *= math.sqrt(beta)
        for c in range(j, k):
            s = 0.0j
            for i in range(j, m):
                s += vs[j, i].conjugate() * wt[c, i]
            for i in range(j, m):
                wt[c, i] -= s * vs[j, i]
    # Q = H_0 H_1 ... H_{k-1} applied to the first k columns of I; H_j fixes e_c for c < j
    qt[:, :] = 0.0
    for c in range(k):
        qt[c, c] = 1.0
    for j in range(k - 1, -1, -1):
        for c in range(j, k):
            s = 0.0j
            for i in range(j, m):
                s += vs[j, i].conjugate() * qt[c, i]
            for i in range(j, m):
                qt[c, i] -= s * vs[j, i]
    # make diag(R) real non-negative
    for j in range(k):
        rjj = wt[j, j]
        arjj = abs(rjj)
        ph = rjj / arjj if arjj > 0.0 else 1.0 + 0.0j
        for i in range(m):
            q[i, j] = qt[j, i] * ph
        cph = ph.conjugate()
        for c in range(k):
            r[j, c] = wt[c, j] * cph if c > j else 0.0
        r[j, j] = arjj


@njit(**_JIT)
def qr_batch(a):
    """Thin Householder QR of a stack ``a`` of shape (n, m, k), m >= k.

    Returns ``(q, r)`` with q (n, m, k) having orthonormal columns and r
    (n, k, k) upper triangular with real non-negative diagonal.
    """
    n, m, k = a.shape
    q = np.empty((n, m, k), dtype=np.complex128)
    r = np.empty((n, k, k), dtype=np.complex128)
    wt = np.empty((k, m), dtype=np.complex128)
    vs = np.empty((k, m), dtype=np.complex128)
    qt = np.empty((k, m), dtype=np.complex128)
    for b in range(n):
        _qr_one(a[b], q[b], r[b], wt, vs, qt)
    return q, r


@njit(**_JIT)
def _tqli(d, e, z, max_iter):
    # implicit-shift QL on a real symmetric tridiagonal (d diag, e sub-diag
    # with e[n-1] = 0); rotations accumulated into the columns of z
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
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
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
                for k in range(z.shape[0]):
                    f2 = z[k, i + 1]
                    z[k, i + 1] = s * z[k, i] + c * f2
                    z[k, i] = c * z[k, i] - s * f2
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@njit(**_JIT)
def hermitian_eig(a, max_iter):
    """Eigen-decomposition of one complex Hermitian matrix.

    Householder reduction to a Hermitian tridiagonal, a diagonal unitary
    that makes the off-diagonal real, then implicit-shift QL.
    Returns ``(w, v, status)``; ``status != 0`` means QL did not converge.
    Eigenvalues are returned unsorted.
    """
    n = a.shape[0]
    A = a.copy()
    Q = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        Q[i, i] = 1.0
    v = np.zeros(n, dtype=np.complex128)
    p = np.zeros(n, dtype=np.complex128)
    w = np.zeros(n, dtype=np.complex128)
    for k in range(n - 2):
        nrm2 = 0.0
        for i in range(k + 1, n):
            nrm2 += A[i, k].real ** 2 + A[i, k].imag ** 2
        tail2 = nrm2 - (A[k + 1, k].real ** 2 + A[k + 1, k].imag ** 2)
        if tail2 <= 0.0:
            continue
        nrm = math.sqrt(nrm2)
        x0 = A[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * nrm
        vnorm2 = 0.0
        for i in range(n):
            if i <= k:
                v[i] = 0.0
            else:
                v[i] = A[i, k]
                if i == k + 1:
                    v[i] -= alpha
                vnorm2 += v[i].real ** 2 + v[i].imag ** 2
        tau = 2.0 / vnorm2
        # p = A v, K = v^* p
        K = 0.0
        for i in range(n):
            s = 0.0j
            for j in range(k + 1, n):
                s += A[i, j] * v[j]
            p[i] = s
        for i in range(k + 1, n):
            K += (v[i].conjugate() * p[i]).real
        for i in range(n):
            w[i] = tau * p[i] - 0.5 * tau * tau * K * v[i]
        for i in range(n):
            for j in range(n):
                A[i, j] -= v[i] * w[j].conjugate() + w[i] * v[j].conjugate()
        # Q <- Q H
        for i in range(n):
            s = 0.0j
            for j in range(k + 1, n):
                s += Q[i, j] * v[j]
            s *= tau
            for j in range(k + 1, n):
                Q[i, j] -= s * v[j].conjugate()
    d = np.empty(n)
    e = np.zeros(n)
    for i in range(n):
        d[i] = A[i, i].real
    sph = 1.0 + 0.0j
    for j in range(n):
        for i in range(n):
            Q[i, j] *= sph
        if j < n - 1:
            off = A[j + 1, j]
            aoff = abs(off)
            e[j] = aoff
            if aoff > 0.0:
                sph = sph * off / aoff
    status = _tqli(d, e, Q, max_iter)
    return d, Q, status


@njit(**_JIT)
def _log_integrand(kind, x, params):
    # kind 0: log Beta(p, q) density with log-normaliser params[2]
    #         params = (p, q, lognorm)
    # kind 1: log of the off-diagonal tail integrand
    #         params = (d, D, a, lognorm)
    if kind == 0:
        p = params[0]
        q = params[1]
        out = params[2]
        if p != 1.0:
            if x <= 0.0:
                return -np.inf
            out += (p - 1.0) * math.log(x)
        if q != 1.0:
            if x >= 1.0:
                return -np.inf
            out += (q - 1.0) * math.log1p(-x)
        return out
    d = params[0]
    D = params[1]
    a = params[2]
    g = x * (1.0 - x) - a
    if g <= 0.0 or x <= 0.0 or x >= 1.0:
        return -np.inf
    return (params[3] + (D - 2.0) * math.log(g)
            - (D - d - 1.0) * math.log(x) - (d - 1.0) * math.log1p(-x))


@njit(**_JIT)
def _gk_rule(kind, params, lo, hi, nodes, wg, wk):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    resk = 0.0
    resg = 0.0
    for i in range(nodes.shape[0]):
        x = c + h * nodes[i]
        lf = _log_integrand(kind, x, params)
        fx = math.exp(lf) if lf > -745.0 else 0.0
        resk += wk[i] * fx
        resg += wg[i] * fx
    return resk * h, abs((resk - resg) * h)


@njit(**_JIT)
def gk_log_integral(kind, params, breaks, epsabs, epsrel, limit):
    """Globally adaptive Gauss-Kronrod (G10/K21) of ``exp(log_integrand)``.

    ``breaks`` is an increasing array of initial sub-interval end points.
    Returns ``(value, error_estimate, status)``; status 1 = limit reached.
    """
    nodes = GK_NODES
    wg = GK_WEIGHTS_G
    wk = GK_WEIGHTS_K
    cap = limit + breaks.shape[0]
    los = np.empty(cap)
    his = np.empty(cap)
    vals = np.empty(cap)
    errs = np.empty(cap)
    n = 0
    for i in range(breaks.shape[0] - 1):
        if breaks[i + 1] <= breaks[i]:
            continue
        v, er = _gk_rule(kind, params, breaks[i], breaks[i + 1], nodes, wg, wk)
        los[n] = breaks[i]
        his[n] = breaks[i + 1]
        vals[n] = v
        errs[n] = er
        n += 1
    status = 0
    while True:
        total = 0.0
        toterr = 0.0
        worst = -1
        worst_err = -1.0
        for i in range(n):
            total += vals[i]
            toterr += errs[i]
            if errs[i] > worst_err:
                worst_err = errs[i]
                worst = i
        if toterr <= max(epsabs, epsrel * abs(total)) or worst < 0:
            break
        if n >= cap:
            status = 1
            break
        lo = los[worst]
        hi = his[worst]
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            status = 2
            break
        v1, e1 = _gk_rule(kind, params, lo, mid, nodes, wg, wk)
        v2, e2 = _gk_rule(kind, params, mid, hi, nodes, wg, wk)
        his[worst] = mid
        vals[worst] = v1
        errs[worst] = e1
        los[n] = mid
        his[n] = hi
        vals[n] = v2
        errs[n] = e2
        n += 1
    # fixed-order final sum
    order = np.argsort(los[:n])
    total = 0.0
    toterr = 0.0
    for i in order:
        total += vals[i]
        toterr += errs[i]
    return total, toterr, status


@njit(**_JIT)
def time_average_sum(freqs, coeffs, T):
    """Exact time average over [0, T] of ``(sum_i a_i exp(i f_i t))**2``."""
    K = freqs.shape[0]
    total = 0.0
    for i in range(K):
        ai = coeffs[i]
        fi = freqs[i]
        acc = 0.0j
        for j in range(K):
            x = 0.5 * (fi + freqs[j]) * T
            if x == 0.0:
                avg = 1.0 + 0.0j
            else:
                avg = (math.cos(x) + 1j * math.sin(x)) * (math.sin(x) / x)
            acc += coeffs[j] * avg
        total += (ai * acc).real
    return total
