"""Pure-Python/numpy versions of the hot loops.

Signatures match :mod:`hjhalf._kernels` exactly; see :mod:`hjhalf._backend`.
PL functions are passed unpacked as ``(xs, ys, left_slope, right_slope)``.
"""
from bisect import bisect_right

import numpy as np


def pl_eval(xs, ys, sl, sr, p):
    """Vectorized PL evaluation with linear tails."""
    p = np.asarray(p, dtype=float)
    out = np.interp(p, xs, ys)
    out = np.where(p < xs[0], ys[0] + sl * (p - xs[0]), out)
    out = np.where(p > xs[-1], ys[-1] + sr * (p - xs[-1]), out)
    return out


def _scalar_pl(xl, yl, sl, sr):
    n = len(xl)

    def f(p):
        if p <= xl[0]:
            return yl[0] + sl * (p - xl[0])
        if p >= xl[n - 1]:
            return yl[n - 1] + sr * (p - xl[n - 1])
        k = bisect_right(xl, p)
        x0, x1 = xl[k - 1], xl[k]
        return yl[k - 1] + (yl[k] - yl[k - 1]) * (p - x0) / (x1 - x0)

    return f


def rk4_march(e0, dt, n, fx, fy, fsl, fsr, taus, cvals, ix, iy, isl, isr):
    """RK4 for ``E' = 1 / G(-2 F(E))`` taking ``n`` steps of size ``dt``.

    ``G(s) = max(C(|s|), Finv(-|s|/2))`` where ``C`` is the step function
    ``C(tau) = cvals[k]`` for the last ``k`` with ``taus[k] <= tau``.

    Returns
    -------
    E, Ep : ndarray
        Values and right-hand sides at the ``n + 1`` nodes.
    """
    F = _scalar_pl(list(fx), list(fy), fsl, fsr)
    Finv = _scalar_pl(list(ix), list(iy), isl, isr)
    tl = list(taus)
    cl = list(cvals)

    def rhs(e):
        s = abs(2.0 * F(e))
        k = bisect_right(tl, s) - 1
        c = cl[k] if k >= 0 else cl[0]
        g = Finv(-0.5 * s)
        return 1.0 / (c if c > g else g)

    E = np.empty(n + 1)
    Ep = np.empty(n + 1)
    e = float(e0)
    E[0] = e
    for i in range(n):
        k1 = rhs(e)
        Ep[i] = k1
        k2 = rhs(e + 0.5 * dt * k1)
        k3 = rhs(e + 0.5 * dt * k2)
        k4 = rhs(e + dt * k3)
        e = e + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        E[i + 1] = e
    Ep[n] = rhs(e)
    return E, Ep


def hj_advance(u, nsteps, hx, hy, hsl, hsr, fx, fy, fsl, fsr, dx, dt, sigma,
               right_mode, p_right):
    """Advance the node array ``u`` in place by ``nsteps`` explicit steps.

    ``right_mode`` 0 uses a ghost node with slope ``p_right``; 1 uses the
    one-sided update ``u_N -= dt * H((u_N - u_{N-1}) / dx)``.
    """
    hx = np.asarray(hx, dtype=float)
    hy = np.asarray(hy, dtype=float)
    fx = np.asarray(fx, dtype=float)
    fy = np.asarray(fy, dtype=float)
    for _ in range(nsteps):
        d = np.diff(u) / dx
        if right_mode == 0:
            d = np.append(d, p_right)
        pl, pr = d[:-1], d[1:]
        flux = pl_eval(hx, hy, hsl, hsr, 0.5 * (pl + pr)) - 0.5 * sigma * (pr - pl)
        b = float(pl_eval(fx, fy, fsl, fsr, d[0]))
        if right_mode == 0:
            u[1:] -= dt * flux
        else:
            last = float(pl_eval(hx, hy, hsl, hsr, d[-1]))
            u[1:-1] -= dt * flux
            u[-1] -= dt * last
        u[0] -= dt * b
    return u


def psi_envelope(E, Ep, FE, xs, ix, iy, isl, isr):
    """Max and min over ``t`` of ``Finv(F(E) - x E') - E`` for each ``x`` in ``xs``."""
    E = np.asarray(E, dtype=float)
    Ep = np.asarray(Ep, dtype=float)
    FE = np.asarray(FE, dtype=float)
    ix = np.asarray(ix, dtype=float)
    iy = np.asarray(iy, dtype=float)
    hi = np.empty(len(xs))
    lo = np.empty(len(xs))
    for j, x in enumerate(xs):
        vals = pl_eval(ix, iy, isl, isr, FE - x * Ep) - E
        hi[j] = vals.max()
        lo[j] = vals.min()
    return hi, lo
