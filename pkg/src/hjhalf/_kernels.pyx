# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Same signatures and results as ``hjhalf._fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _pl(const double[::1] xs, const double[::1] ys, double sl, double sr,
                       double p) noexcept nogil:
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t lo, hi, mid
    if p <= xs[0]:
        return ys[0] + sl * (p - xs[0])
    if p >= xs[n - 1]:
        return ys[n - 1] + sr * (p - xs[n - 1])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if xs[mid] <= p:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[hi] - ys[lo]) * (p - xs[lo]) / (xs[hi] - xs[lo])


def pl_eval(xs, ys, double sl, double sr, p):
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    arr = np.ascontiguousarray(p, dtype=np.float64)
    out = np.empty_like(arr)
    cdef const double[::1] pv = arr.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i
    for i in range(pv.shape[0]):
        ov[i] = _pl(xv, yv, sl, sr, pv[i])
    return out


cdef inline double _rhs(double e, const double[::1] fx, const double[::1] fy, double fsl,
                        double fsr, const double[::1] taus, const double[::1] cvals,
                        const double[::1] ix, const double[::1] iy, double isl,
                        double isr) noexcept nogil:
    cdef double s = fabs(2.0 * _pl(fx, fy, fsl, fsr, e))
    cdef Py_ssize_t m = taus.shape[0]
    cdef Py_ssize_t lo = 0, hi = m, mid
    # last k with taus[k] <= s
    while lo < hi:
        mid = (lo + hi) >> 1
        if taus[mid] <= s:
            lo = mid + 1
        else:
            hi = mid
    cdef double c = cvals[lo - 1] if lo > 0 else cvals[0]
    cdef double g = _pl(ix, iy, isl, isr, -0.5 * s)
    return 1.0 / (c if c > g else g)


def rk4_march(double e0, double dt, Py_ssize_t n, fx, fy, double fsl, double fsr,
              taus, cvals, ix, iy, double isl, double isr):
    cdef const double[::1] fxv = np.ascontiguousarray(fx, dtype=np.float64)
    cdef const double[::1] fyv = np.ascontiguousarray(fy, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(taus, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(cvals, dtype=np.float64)
    cdef const double[::1] ixv = np.ascontiguousarray(ix, dtype=np.float64)
    cdef const double[::1] iyv = np.ascontiguousarray(iy, dtype=np.float64)
    E_arr = np.empty(n + 1)
    Ep_arr = np.empty(n + 1)
    cdef double[::1] E = E_arr
    cdef double[::1] Ep = Ep_arr
    cdef double e = e0, k1, k2, k3, k4
    cdef Py_ssize_t i
    with nogil:
        E[0] = e
        for i in range(n):
            k1 = _rhs(e, fxv, fyv, fsl, fsr, tv, cv, ixv, iyv, isl, isr)
            Ep[i] = k1
            k2 = _rhs(e + 0.5 * dt * k1, fxv, fyv, fsl, fsr, tv, cv, ixv, iyv, isl, isr)
            k3 = _rhs(e + 0.5 * dt * k2, fxv, fyv, fsl, fsr, tv, cv, ixv, iyv, isl, isr)
            k4 = _rhs(e + dt * k3, fxv, fyv, fsl, fsr, tv, cv, ixv, iyv, isl, isr)
            e = e + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            E[i + 1] = e
        Ep[n] = _rhs(e, fxv, fyv, fsl, fsr, tv, cv, ixv, iyv, isl, isr)
    return E_arr, Ep_arr


def hj_advance(double[::1] u, Py_ssize_t nsteps, hx, hy, double hsl, double hsr,
               fx, fy, double fsl, double fsr, double dx, double dt, double sigma,
               int right_mode, double p_right):
    cdef const double[::1] hxv = np.ascontiguousarray(hx, dtype=np.float64)
    cdef const double[::1] hyv = np.ascontiguousarray(hy, dtype=np.float64)
    cdef const double[::1] fxv = np.ascontiguousarray(fx, dtype=np.float64)
    cdef const double[::1] fyv = np.ascontiguousarray(fy, dtype=np.float64)
    cdef Py_ssize_t N = u.shape[0] - 1
    cdef Py_ssize_t i, s
    cdef double[::1] d = np.empty(N + 1)
    cdef double pl, pr, b, last = 0.0
    with nogil:
        for s in range(nsteps):
            for i in range(N):
                d[i] = (u[i + 1] - u[i]) / dx
            d[N] = p_right
            b = _pl(fxv, fyv, fsl, fsr, d[0])
            if right_mode != 0:
                last = _pl(hxv, hyv, hsl, hsr, d[N - 1])
            for i in range(1, N):
                pl = d[i - 1]
                pr = d[i]
                u[i] -= dt * (_pl(hxv, hyv, hsl, hsr, 0.5 * (pl + pr)) - 0.5 * sigma * (pr - pl))
            if right_mode == 0:
                pl = d[N - 1]
                pr = d[N]
                u[N] -= dt * (_pl(hxv, hyv, hsl, hsr, 0.5 * (pl + pr)) - 0.5 * sigma * (pr - pl))
            else:
                u[N] -= dt * last
            u[0] -= dt * b
    return np.asarray(u)


def psi_envelope(E, Ep, FE, xs, ix, iy, double isl, double isr):
    cdef const double[::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] Epv = np.ascontiguousarray(Ep, dtype=np.float64)
    cdef const double[::1] FEv = np.ascontiguousarray(FE, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] ixv = np.ascontiguousarray(ix, dtype=np.float64)
    cdef const double[::1] iyv = np.ascontiguousarray(iy, dtype=np.float64)
    hi_arr = np.empty(xv.shape[0])
    lo_arr = np.empty(xv.shape[0])
    cdef double[::1] hi = hi_arr
    cdef double[::1] lo = lo_arr
    cdef Py_ssize_t j, k
    cdef double x, v, vmax, vmin
    with nogil:
        for j in range(xv.shape[0]):
            x = xv[j]
            vmax = -1e308
            vmin = 1e308
            for k in range(Ev.shape[0]):
                v = _pl(ixv, iyv, isl, isr, FEv[k] - x * Epv[k]) - Ev[k]
                if v > vmax:
                    vmax = v
                if v < vmin:
                    vmin = v
            hi[j] = vmax
            lo[j] = vmin
    return hi_arr, lo_arr
