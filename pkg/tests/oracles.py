"""Independent reference computations used only by the tests."""
import math

import numpy as np
import mpmath


def simpson(f, a, b, tol=1e-11, depth=60):
    """Plain recursive adaptive Simpson on a scalar function."""
    def rec(a, fa, m, fm, b, fb, whole, tol, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (rec(a, fa, lm, flm, m, fm, left, tol / 2, depth - 1)
                + rec(m, fm, rm, frm, b, fb, right, tol / 2, depth - 1))

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    return rec(a, fa, m, fm, b, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth)


def time_average_oracle(H_matrix, psi0, projector, target, T, panels=None, rule="gauss"):
    """(1/T) int_0^T (<psi_t, P psi_t> - target)^2 dt with numpy's eigh for the evolution.

    The integrand is a trigonometric polynomial with frequencies up to twice the
    spectral spread, so 24-point Gauss-Legendre on panels shorter than a period
    is exact to rounding. ``rule="simpson"`` uses the recursive Simpson instead.
    """
    w, v = np.linalg.eigh(H_matrix)
    c = v.conj().T @ psi0
    spread = float(w[-1] - w[0]) or 1.0
    panels = panels or max(8, int(np.ceil(T * spread / 2)))
    edges = np.linspace(0.0, T, panels + 1)

    if rule == "simpson":
        def f(t):
            psi = v @ (np.exp(-1j * t * w) * c)
            return (np.real(np.vdot(psi, projector @ psi)) - target) ** 2
        return sum(simpson(f, edges[i], edges[i + 1], tol=1e-12 / panels) for i in range(panels)) / T

    x, wt = np.polynomial.legendre.leggauss(24)
    total = 0.0
    for lo in range(0, panels, 4096):
        hi = min(lo + 4096, panels)
        a, b = edges[lo:hi], edges[lo + 1:hi + 1]
        t = (0.5 * (b - a)[:, None] * x + 0.5 * (a + b)[:, None]).ravel()
        psi = (np.exp(-1j * np.outer(t, w)) * c) @ v.T
        val = (np.real(np.einsum("ti,ij,tj->t", psi.conj(), projector, psi)) - target) ** 2
        total += float(np.sum(val.reshape(len(a), -1) * wt * 0.5 * (b - a)[:, None]))
    return total / T


def nr_brute_force(E, tol):
    """Scan every quadruple (a, b, a2, b2), 0-based."""
    E = np.asarray(E, dtype=float)
    n = len(E)
    scale = tol * (E[-1] - E[0])
    for a in range(n):
        for b in range(a + 1, n):
            if abs(E[a] - E[b]) <= scale:
                return False, False
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            for a2 in range(n):
                for b2 in range(n):
                    if a2 == b2 or (a2 == a and b2 == b):
                        continue
                    if abs((E[a] - E[b]) - (E[a2] - E[b2])) <= scale:
                        return True, False
    return True, True


def cubic_eigenvalues(m):
    """Roots of the characteristic polynomial of a 3x3 Hermitian matrix."""
    m = np.asarray(m)
    c2 = -np.trace(m).real
    c1 = 0.5 * (np.trace(m).real ** 2 - np.trace(m @ m).real)
    c0 = -np.linalg.det(m).real
    return np.sort(np.roots([1.0, c2, c1, c0]).real)


def offdiag_tail_substituted(d, D, a, dps=30):
    """J(d, D, a) through the substitution x = w(1-w), y = (x-a)/(1/4-a).

    Evaluated with mpmath's tanh-sinh rule, which absorbs the (1-y)^(-1/2)
    endpoint singularity. The integrand peaks within ~1/D of y = 1, so the
    breakpoints cluster there geometrically.
    """
    if a >= 0.25:
        return 0.0
    with mpmath.workdps(dps):
        a = mpmath.mpf(a)
        r = mpmath.sqrt(1 - 4 * a)
        logpre = (mpmath.loggamma(D) - mpmath.loggamma(d) - mpmath.loggamma(D - d)
                  - D * mpmath.log(2) + (D - mpmath.mpf(3) / 2) * mpmath.log(1 - 4 * a))

        def g(y):
            if y <= 0 or y >= 1:
                return mpmath.mpf(0)
            s = r * mpmath.sqrt(1 - y)
            l1m, l1p = mpmath.log1p(-s), mpmath.log1p(s)
            base = logpre + (D - 2) * mpmath.log(y) - mpmath.log(1 - y) / 2
            return (mpmath.exp(base + (d + 1 - D) * l1m + (1 - d) * l1p)
                    + mpmath.exp(base + (d + 1 - D) * l1p + (1 - d) * l1m))

        ys = np.linspace(0.0, 1.0, 20001)[1:-1]
        logs = [float(mpmath.log(g(mpmath.mpf(y)))) if g(mpmath.mpf(y)) > 0 else -math.inf for y in ys[::20]]
        mode = float(ys[::20][int(np.argmax(logs))])
        pts = {mpmath.mpf(0), mpmath.mpf(1)} | {1 - mpmath.mpf(2) ** -k for k in range(1, 40)}
        pts |= {mpmath.mpf(k) / 64 for k in range(1, 64)}
        pts |= {mpmath.mpf(mode) + sgn * mpmath.mpf(2) ** -k for k in range(3, 30) for sgn in (-1, 1)}
        pts = sorted(p for p in pts if 0 <= p <= 1)
        return float(mpmath.quad(g, pts))
