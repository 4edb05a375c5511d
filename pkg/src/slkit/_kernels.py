"""Compiled propagators for the quasi-derivative Sturm-Liouville system.

The potential enters only through sigma, stored as a continuous or
jump-carrying piecewise-linear function on breakpoints ``x``.  On every
segment ``q = sigma'`` is constant, so the classical solution
``phi(0) = 0, phi'(0) = 1`` is propagated with exact trigonometric (or
hyperbolic) transfer matrices.  A zero-length segment is a jump of sigma
(a delta in q): ``phi`` and the quasi-derivative ``phi' - sigma*phi`` stay
continuous, so ``phi'`` jumps by ``(sigma+ - sigma-) * phi``.
"""
import math

import numba as nb
import numpy as np

_jit = {"nogil": True, "cache": True}

# below this |mu h^2| the closed forms lose digits to cancellation
_SERIES_CUT = 0.05


@nb.njit(**_jit)
def segment_functions(mu, h):
    """Return ``(c, sn, iss)`` for a segment of length ``h``.

    ``c`` and ``sn`` solve ``-y'' = mu*y`` with (1, 0) and (0, 1) initial
    data, evaluated at ``h``; ``iss`` is the integral of ``sn(t)**2`` over
    ``[0, h]``.
    """
    x = mu * h * h
    if abs(x) < _SERIES_CUT:
        # C(x) = sum (-x)^n/(2n)!, S(x) = sum (-x)^n/(2n+1)!,
        # iss = 2 h^3 sum (-4x)^n/(2n+3)!
        c = 0.0
        s = 0.0
        f = 0.0
        tc = 1.0
        ts = 1.0
        tf = 1.0 / 6.0
        for n in range(10):
            c += tc
            s += ts
            f += tf
            tc *= -x / ((2 * n + 1) * (2 * n + 2))
            ts *= -x / ((2 * n + 2) * (2 * n + 3))
            tf *= -4.0 * x / ((2 * n + 4) * (2 * n + 5))
        return c, h * s, 2.0 * h * h * h * f
    if x > 0.0:
        w = math.sqrt(mu)
        c = math.cos(w * h)
        sn = math.sin(w * h) / w
    else:
        w = math.sqrt(-mu)
        c = math.cosh(w * h)
        sn = math.sinh(w * h) / w
    return c, sn, (h - c * sn) / (2.0 * mu)


@nb.njit(**_jit)
def shoot_one(x, sig, lam):
    """Propagate the classical solution across [x[0], x[-1]].

    Returns ``(phi_end, dphi_end, zeros, l2, status)`` where ``dphi_end`` is
    the ordinary derivative at the right end, ``zeros`` counts zeros of phi
    in the half-open interval (x[0], x[-1]], ``l2`` is the integral of
    phi**2 and ``status`` is the index of the first segment that produced a
    non-finite state (-1 on success).
    """
    y = 0.0
    p = 1.0
    zeros = 0
    l2 = 0.0
    for i in range(x.shape[0] - 1):
        h = x[i + 1] - x[i]
        ds = sig[i + 1] - sig[i]
        if h <= 0.0:
            p += ds * y
            continue
        mu = lam - ds / h
        c, sn, iss = segment_functions(mu, h)
        l2 += y * y * 0.5 * (h + c * sn) + y * p * sn * sn + p * p * iss
        yn = c * y + sn * p
        pn = -mu * sn * y + c * p
        if mu > 0.0:
            w = math.sqrt(mu)
            ph0 = math.atan2(w * y, p)
            ph1 = ph0 + w * h
            zeros += int(math.floor(ph1 / math.pi) - math.floor(ph0 / math.pi))
        elif y != 0.0 and y * yn <= 0.0:
            zeros += 1
        y = yn
        p = pn
        if not (math.isfinite(y) and math.isfinite(p)):
            return y, p, zeros, l2, i
    return y, p, zeros, l2, -1


@nb.njit(**_jit)
def shoot_many(x, sig, lams):
    n = lams.shape[0]
    y = np.empty(n)
    p = np.empty(n)
    z = np.empty(n, dtype=np.int64)
    l2 = np.empty(n)
    st = np.empty(n, dtype=np.int64)
    for j in range(n):
        y[j], p[j], z[j], l2[j], st[j] = shoot_one(x, sig, lams[j])
    return y, p, z, l2, st


@nb.njit(**_jit)
def zero_count(x, sig, lam):
    return shoot_one(x, sig, lam)[2]


@nb.njit(**_jit)
def _refine(x, sig, k, a, b, tol, maxiter):
    # shrink [a, b] until it holds exactly the k-th eigenvalue
    ca = zero_count(x, sig, a)
    cb = zero_count(x, sig, b)
    it = 0
    while (ca != k - 1 or cb != k) and it < maxiter:
        m = 0.5 * (a + b)
        cm = zero_count(x, sig, m)
        if cm >= k:
            b = m
            cb = cm
        else:
            a = m
            ca = cm
        it += 1
        if b - a <= tol:
            return 0.5 * (a + b), it
    # Illinois regula falsi on phi(pi, lambda); bisect when it stalls
    fa = shoot_one(x, sig, a)[0]
    fb = shoot_one(x, sig, b)[0]
    # an exact root at a is eigenvalue k - 1; step off it
    while fa == 0.0 and b - a > tol and it < maxiter:
        m = 0.5 * (a + b)
        it += 1
        if zero_count(x, sig, m) >= k:
            b = m
            fb = shoot_one(x, sig, m)[0]
        else:
            a = m
            fa = shoot_one(x, sig, m)[0]
    side = 0
    m = 0.5 * (a + b)
    while b - a > tol and it < maxiter:
        if fb == 0.0:
            return b, it
        m = (a * fb - b * fa) / (fb - fa)
        if not (a < m < b) or (b - a) < 1e-3 * tol:
            m = 0.5 * (a + b)
        fm = shoot_one(x, sig, m)[0]
        it += 1
        if fm == 0.0:
            return m, it
        if (fm > 0.0) == (fb > 0.0):
            b = m
            fb = fm
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a = m
            fa = fm
            if side == 1:
                fb *= 0.5
            side = 1
        if abs(b - a) <= tol:
            break
    return 0.5 * (a + b) if b - a <= tol else m, it


@nb.njit(**_jit)
def eigen_batch(x, sig, ks, lo, hi, tol, maxiter):
    """Eigenvalues with indices ``ks`` given a common bracket [lo, hi].

    ``zero_count(lo)`` must be 0, ``zero_count(hi) >= max(ks)`` and ``ks``
    must be ascending.
    """
    out = np.empty(ks.shape[0])
    its = np.empty(ks.shape[0], dtype=np.int64)
    a = lo
    for j in range(ks.shape[0]):
        # zero_count at any earlier root is at most k - 1
        out[j], its[j] = _refine(x, sig, ks[j], a, hi, tol, maxiter)
        a = out[j]
    return out, its


@nb.njit(**_jit)
def sample(x, sig, lams, pts):
    """Values of the classical solution at sorted points ``pts``.

    Returns an array of shape ``(pts.size, lams.size)``.
    """
    npt = pts.shape[0]
    out = np.zeros((npt, lams.shape[0]))
    nseg = x.shape[0] - 1
    for j in range(lams.shape[0]):
        lam = lams[j]
        y = 0.0
        p = 1.0
        ip = 0
        while ip < npt and pts[ip] <= x[0]:
            out[ip, j] = 0.0
            ip += 1
        for i in range(nseg):
            h = x[i + 1] - x[i]
            ds = sig[i + 1] - sig[i]
            if h <= 0.0:
                p += ds * y
                continue
            mu = lam - ds / h
            while ip < npt and (pts[ip] < x[i + 1] or i == nseg - 1):
                t = pts[ip] - x[i]
                c, sn, _ = segment_functions(mu, t)
                out[ip, j] = c * y + sn * p
                ip += 1
            c, sn, _ = segment_functions(mu, h)
            yn = c * y + sn * p
            p = -mu * sn * y + c * p
            y = yn
    return out
