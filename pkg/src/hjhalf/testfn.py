"""Tabulated coupling test function ``phi(t, x) = f(t) + g(x) + x E(t)``.

Given a strictly decreasing boundary flux ``F`` with ``F(0) = 0`` the builder
produces

* ``G``: even, non-decreasing in ``|s|``, ``G >= max((-F^{-1})', (-2F)^{-1})``;
* ``E``: solution of ``E' = 1 / G(-2 F(E))``, ``E(0) = 0`` (RK4);
* ``f``: ``f' = -F(E)``, ``f(0) = 0``;
* ``g``: ``g(0) = 0`` with ``g' >= max(2x, psi_1)`` for ``x >= 0`` and
  ``g' <= min(2x, psi_2)`` for ``x <= 0``, where ``psi_1``/``psi_2`` are the
  sup/inf over ``t`` of ``psi(t, x) = F^{-1}(F(E) - x E') - E``.

With these choices ``phi_t + F(phi_x) <= 0`` for ``x >= 0`` and ``>= 0`` for
``x <= 0``; :func:`verify_phi` checks this and the other properties on
sample grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import (InadmissibleFlux, NotStrictlyDecreasing, StepTooLarge,
                     TailBoundUnverified, VerificationFailed)
from .pwl import PLFunction, inverse

__all__ = [
    "GFunction",
    "ETable",
    "FTable",
    "PsiTables",
    "GTable",
    "TestFunctionTables",
    "PhiReport",
    "build_G",
    "solve_E",
    "build_f",
    "psi",
    "psi_envelopes",
    "build_g",
    "assemble_phi",
    "verify_phi",
    "build_test_function",
]

DEFAULT_DT = 1e-3
DEFAULT_TMAX = 100.0
DEFAULT_R = 50.0
DEFAULT_NX = 1001
DEFAULT_MARGIN = 0.05


def _unpack(f: PLFunction):
    return f.xs, f.ys, f.left_slope, f.right_slope


@dataclass(frozen=True)
class GFunction:
    """``G(s) = max(C(|s|), Finv(-|s|/2))`` with ``C`` a non-decreasing step function.

    ``C(tau)`` is ``cvals[k]`` for the last ``k`` with ``taus[k] <= tau``.
    """

    taus: np.ndarray
    cvals: np.ndarray
    Finv: PLFunction

    def __call__(self, s):
        a = np.abs(np.asarray(s, dtype=float))
        k = np.searchsorted(self.taus, a, side="right") - 1
        c = self.cvals[np.maximum(k, 0)]
        out = np.maximum(c, self.Finv(-0.5 * a))
        return float(out) if out.ndim == 0 else out


def _check_flux(F: PLFunction) -> None:
    slopes = F.all_slopes
    if np.any(slopes >= 0):
        raise NotStrictlyDecreasing(
            "F must be strictly decreasing on every piece; slopes "
            + ", ".join(f"{s:g}" for s in slopes))
    if abs(F.value(0.0)) > 1e-12:
        raise InadmissibleFlux(f"F(0) must vanish, got {F.value(0.0):.15g}")


def build_G(F: PLFunction) -> GFunction:
    """Smallest even majorant of ``max((-F^{-1})', (-2F)^{-1})`` monotone in ``|s|``.

    On the piece of ``F`` with slope ``m`` the derivative ``(-F^{-1})'`` equals
    ``1/|m|`` and it is reached for ``|s|`` at least the activation radius
    ``max(0, F(right end), -F(left end))``.

    Raises
    ------
    NotStrictlyDecreasing
        If some piece of ``F`` has slope ``>= 0``.
    """
    _check_flux(F)
    xs, ys = F.xs, F.ys
    n = xs.size
    pieces = [(math.inf, float(ys[0]), F.left_slope)]
    for k in range(n - 1):
        m = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
        pieces.append((float(ys[k]), float(ys[k + 1]), float(m)))
    pieces.append((float(ys[-1]), -math.inf, F.right_slope))
    rad = []
    for f_left, f_right, m in pieces:
        rad.append((max(0.0, f_right, -f_left), 1.0 / abs(m)))
    rad.sort()
    taus = np.array([r for r, _ in rad])
    cvals = np.maximum.accumulate(np.array([c for _, c in rad]))
    # collapse equal thresholds, keeping the largest value
    keep = np.append(taus[1:] != taus[:-1], True)
    return GFunction(taus[keep], cvals[keep], inverse(F))


@dataclass(frozen=True)
class ETable:
    """``E`` and ``E'`` on the uniform grid ``t = dt * (-n .. n)``."""

    t: np.ndarray
    E: np.ndarray
    Ep: np.ndarray
    dt: float

    @property
    def T_max(self) -> float:
        return float(self.t[-1])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, self.t.size - 2)
        return t, i, t - self.t[i]

    def E_at(self, t):
        """Cubic Hermite interpolation of ``E`` using the stored slopes."""
        t, i, s = self._locate(t)
        h = self.dt
        u = s / h
        y0, y1 = self.E[i], self.E[i + 1]
        d0, d1 = self.Ep[i], self.Ep[i + 1]
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    def Ep_at(self, t):
        t, i, s = self._locate(t)
        w = s / self.dt
        return (1 - w) * self.Ep[i] + w * self.Ep[i + 1]


def solve_E(F: PLFunction, G: GFunction, T_max: float = DEFAULT_TMAX,
            dt: float = DEFAULT_DT) -> ETable:
    """Integrate ``E' = 1/G(-2F(E))`` from ``E(0) = 0`` in both directions.

    Raises
    ------
    StepTooLarge
        If the computed ``E`` is not strictly increasing on the grid.
    """
    if not (dt > 0 and T_max > 0):
        raise ValueError("dt and T_max must be positive")
    n = int(round(T_max / dt))
    if n < 1:
        raise ValueError("T_max must be at least one step")
    args = (*_unpack(F), G.taus, G.cvals, *_unpack(G.Finv))
    Ef, Epf = _backend.rk4_march(0.0, dt, n, *args)
    Eb, Epb = _backend.rk4_march(0.0, -dt, n, *args)
    E = np.concatenate((Eb[::-1], Ef[1:]))
    Ep = np.concatenate((Epb[::-1], Epf[1:]))
    t = dt * np.arange(-n, n + 1, dtype=float)
    if not np.all(np.diff(E) > 0) or not np.all(np.isfinite(E)):
        raise StepTooLarge(f"E is not strictly increasing with dt={dt:g}; reduce dt")
    return ETable(t, E, Ep, dt)


@dataclass(frozen=True)
class FTable:
    """``f`` and ``f' = -F(E)`` on the time grid of an :class:`ETable`."""

    t: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    dt: float

    def f_at(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, self.t.size - 2)
        s = t - self.t[i]
        return self.f[i] + self.fp[i] * s + (self.fp[i + 1] - self.fp[i]) * s * s / (2 * self.dt)


def _integrate_from_centre(deriv: np.ndarray, h: float, c: int) -> np.ndarray:
    out = np.zeros_like(deriv)
    trap = 0.5 * h * (deriv[1:] + deriv[:-1])
    out[c + 1:] = np.cumsum(trap[c:])
    out[:c] = -np.cumsum(trap[:c][::-1])[::-1]
    return out


def build_f(etab: ETable, F: PLFunction) -> FTable:
    """Trapezoid integral of ``-F(E)`` from ``t = 0`` (exact for the PL interpolant)."""
    fp = -F(etab.E)
    c = etab.t.size // 2
    return FTable(etab.t, _integrate_from_centre(fp, etab.dt, c), fp, etab.dt)


def psi(F: PLFunction, etab: ETable, t, x, Finv: PLFunction | None = None):
    """``F^{-1}(F(E(t)) - x E'(t)) - E(t)`` with interpolated ``E``, ``E'``."""
    Finv = inverse(F) if Finv is None else Finv
    e = etab.E_at(t)
    ep = etab.Ep_at(t)
    out = Finv(F(e) - np.asarray(x, dtype=float) * ep) - e
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PsiTables:
    """Grid envelopes over the certified time window ``[t_lo, t_hi]``.

    ``hi[j]`` (``lo[j]``) is the max (min) over the window of ``psi(t, x_j)``.
    Outside the window ``psi(t, x)`` lies between 0 and ``x`` whenever
    ``|x| <= R``, so ``psi_1 <= max(hi, x)`` and ``psi_2 >= min(lo, x)``.
    """

    x: np.ndarray
    hi: np.ndarray
    lo: np.ndarray
    t_lo: float
    t_hi: float
    R: float

    @property
    def psi1(self) -> np.ndarray:
        return np.maximum(self.hi, np.where(self.x >= 0, self.x, -np.inf))

    @property
    def psi2(self) -> np.ndarray:
        return np.minimum(self.lo, np.where(self.x <= 0, self.x, np.inf))


def tail_certificate(F: PLFunction, etab: ETable, R: float) -> np.ndarray:
    """Nodes where ``R E'(t) <= |F(E(t))|``; there ``|psi(t, x) / x| <= 1`` for ``|x| <= R``."""
    return R * etab.Ep <= np.abs(F(etab.E))


def psi_envelopes(F: PLFunction, etab: ETable, x_grid, R: float,
                  Finv: PLFunction | None = None) -> PsiTables:
    """Envelopes of ``psi`` over ``t``, computed on the certified window only.

    Raises
    ------
    TailBoundUnverified
        If the certificate fails at either end of the time grid.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(np.abs(x_grid) > R * (1 + 1e-12)):
        raise ValueError("x_grid must lie in [-R, R]")
    cert = tail_certificate(F, etab, R)
    if not (cert[0] and cert[-1]):
        raise TailBoundUnverified(
            f"R*E'(t) <= |F(E(t))| fails at |t| = {etab.T_max:g}; increase T_max")
    c = etab.t.size // 2
    # the certificate is monotone in |t|: find the first certified node on each side
    right = c + int(np.argmax(cert[c:]))
    left = c - int(np.argmax(cert[:c + 1][::-1]))
    sl = slice(left, right + 1)
    Finv = inverse(F) if Finv is None else Finv
    FE = F(etab.E[sl])
    hi, lo = _backend.psi_envelope(etab.E[sl], etab.Ep[sl], FE, x_grid, *_unpack(Finv))
    return PsiTables(x_grid, hi, lo, float(etab.t[left]), float(etab.t[right]), float(R))


@dataclass(frozen=True)
class GTable:
    x: np.ndarray
    gp: np.ndarray
    g: np.ndarray
    margin: float

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.x.size - 2)
        return x, i, x - self.x[i], self.x[i + 1] - self.x[i]

    def gp_at(self, x):
        x, i, s, h = self._locate(x)
        w = s / h
        return (1 - w) * self.gp[i] + w * self.gp[i + 1]

    def g_at(self, x):
        x, i, s, h = self._locate(x)
        return self.g[i] + self.gp[i] * s + (self.gp[i + 1] - self.gp[i]) * s * s / (2 * h)


def build_g(psi_tab: PsiTables, margin: float = DEFAULT_MARGIN) -> GTable:
    """``g' = (1 + margin) max(2x, psi_1)`` on ``x >= 0``, mirrored with ``min`` on ``x <= 0``.

    Each node also takes the envelope value of its outer neighbour, so the
    linear interpolant of ``g'`` dominates ``psi_1`` between nodes as well
    (``psi`` is increasing in ``x``).
    """
    x = psi_tab.x
    if x.size < 3 or not np.any(x == 0.0):
        raise ValueError("x grid must contain 0 and at least three nodes")
    p1 = psi_tab.psi1
    p2 = psi_tab.psi2
    c = int(np.flatnonzero(x == 0.0)[0])
    gp = np.zeros_like(x)
    k = 1.0 + margin
    for j in range(c + 1, x.size):
        nxt = p1[min(j + 1, x.size - 1)]
        gp[j] = k * max(2 * x[j], p1[j], nxt)
    for j in range(c - 1, -1, -1):
        nxt = p2[max(j - 1, 0)]
        gp[j] = k * min(2 * x[j], p2[j], nxt)
    gp[c] = 0.0
    # exact integral of the PL g'
    h = np.diff(x)
    trap = 0.5 * h * (gp[1:] + gp[:-1])
    g = np.zeros_like(x)
    g[c + 1:] = np.cumsum(trap[c:])
    g[:c] = -np.cumsum(trap[:c][::-1])[::-1]
    return GTable(x, gp, g, margin)


@dataclass(frozen=True)
class TestFunctionTables:
    """All tables of ``phi`` plus vectorized evaluators."""

    F: PLFunction
    G: GFunction
    etab: ETable
    ftab: FTable
    gtab: GTable
    psi_tab: PsiTables | None = None

    @property
    def t_grid(self):
        return self.etab.t

    @property
    def x_grid(self):
        return self.gtab.x

    @property
    def E_values(self):
        return self.etab.E

    @property
    def Eprime_values(self):
        return self.etab.Ep

    @property
    def f_values(self):
        return self.ftab.f

    @property
    def g_values(self):
        return self.gtab.g

    @property
    def gprime_values(self):
        return self.gtab.gp

    @property
    def T_max(self) -> float:
        return self.etab.T_max

    @property
    def R(self) -> float:
        return float(self.gtab.x[-1])

    def phi(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return self.ftab.f_at(t) + self.gtab.g_at(x) + x * self.etab.E_at(t)

    def phi_t(self, t, x):
        t = np.asarray(t, dtype=float)
        return -self.F(self.etab.E_at(t)) + np.asarray(x, dtype=float) * self.etab.Ep_at(t)

    def phi_x(self, t, x):
        return self.gtab.gp_at(x) + self.etab.E_at(t)

    def residual(self, t, x):
        """``phi_t + F(phi_x)``."""
        return self.phi_t(t, x) + self.F(self.phi_x(t, x))


def assemble_phi(F: PLFunction, G: GFunction, etab: ETable, ftab: FTable, gtab: GTable,
                 psi_tab: PsiTables | None = None) -> TestFunctionTables:
    if ftab.t.shape != etab.t.shape:
        raise ValueError("f and E tables must share the time grid")
    return TestFunctionTables(F, G, etab, ftab, gtab, psi_tab)


# ---------------------------------------------------------------------------
# verification

@dataclass
class PhiReport:
    n_samples: int
    sign_max_right: float  # max of phi_t + F(phi_x) over x >= 0
    sign_min_left: float   # min over x <= 0
    positivity_min: float  # min of phi over samples away from the origin
    superlin_min: float    # min of phi - (f - E^2/2 + x^2/2)
    ray_failures: list = field(default_factory=list)
    offenders: dict = field(default_factory=dict)
    tol: float = 1e-9

    @property
    def sign_ok(self) -> bool:
        return self.sign_max_right <= self.tol and self.sign_min_left >= -self.tol

    @property
    def positivity_ok(self) -> bool:
        return self.positivity_min > 0

    @property
    def superlinearity_ok(self) -> bool:
        return self.superlin_min >= -self.tol and not self.ray_failures

    @property
    def ok(self) -> bool:
        return self.sign_ok and self.positivity_ok and self.superlinearity_ok

    def summary(self) -> str:
        lines = [
            f"samples {self.n_samples}",
            f"differential_inequality {'PASS' if self.sign_ok else 'FAIL'} "
            f"max_right={self.sign_max_right:.15g} min_left={self.sign_min_left:.15g}",
            f"positivity {'PASS' if self.positivity_ok else 'FAIL'} min_phi={self.positivity_min:.15g}",
            f"superlinearity {'PASS' if self.superlinearity_ok else 'FAIL'} "
            f"min_gap={self.superlin_min:.15g} ray_failures={len(self.ray_failures)}",
        ]
        for name, pts in sorted(self.offenders.items()):
            shown = ", ".join(f"({t:.6g}, {x:.6g})" for t, x in pts[:10])
            lines.append(f"offenders {name}: {shown}")
        return "\n".join(lines)


def _with_zero(a: np.ndarray) -> np.ndarray:
    return np.union1d(a, [0.0])


def verify_phi(tables: TestFunctionTables, n_t: int = 512, n_x: int = 512,
               T: float | None = None, X: float | None = None,
               strict: bool = True, tol: float = 1e-9) -> PhiReport:
    """Check the three defining properties of ``phi`` on a sample grid.

    Samples form the tensor grid of ``n_t`` points in ``[-T, T]`` and ``n_x``
    in ``[-X, X]`` (both augmented with 0; defaults span the full tables).

    Raises
    ------
    VerificationFailed
        When ``strict`` and some check fails; the report lists offenders.
    """
    T = tables.T_max if T is None else T
    X = tables.R if X is None else X
    ts = _with_zero(np.linspace(-T, T, n_t))
    xs = _with_zero(np.linspace(-X, X, n_x))
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    tt = tt.ravel()
    xx = xx.ravel()
    res = tables.residual(tt, xx)
    phi = tables.phi(tt, xx)
    offenders: dict[str, list] = {}

    right = xx >= 0
    left = xx <= 0
    smax = float(res[right].max())
    smin = float(res[left].min())
    bad = (right & (res > tol)) | (left & (res < -tol))
    if np.any(bad):
        offenders["differential_inequality"] = list(zip(tt[bad].tolist(), xx[bad].tolist()))

    away = np.hypot(tt, xx) >= 1e-3
    pmin = float(phi[away].min())
    bad = away & ~(phi > 0)
    if np.any(bad):
        offenders["positivity"] = list(zip(tt[bad].tolist(), xx[bad].tolist()))

    e = tables.etab.E_at(tt)
    lower = tables.ftab.f_at(tt) - 0.5 * e * e + 0.5 * xx * xx
    gap = phi - lower
    scale = np.maximum(1.0, np.abs(phi))
    smin_gap = float((gap / scale).min())
    bad = gap < -tol * scale
    if np.any(bad):
        offenders["superlinearity"] = list(zip(tt[bad].tolist(), xx[bad].tolist()))

    rays = []
    radii = np.array([1.0, 2.0, 4.0, 8.0])
    for k in range(16):
        th = 2 * math.pi * k / 16
        rt, rx = radii * math.cos(th), radii * math.sin(th)
        q = tables.phi(rt, rx) / radii
        if not np.all(np.diff(q) > 0):
            rays.append(k)

    rep = PhiReport(tt.size, smax, smin, pmin, smin_gap, rays, offenders, tol)
    if strict and not rep.ok:
        raise VerificationFailed(rep)
    return rep


def build_test_function(F: PLFunction, dt: float = DEFAULT_DT, T_max: float = DEFAULT_TMAX,
                        R: float = DEFAULT_R, nx: int = DEFAULT_NX,
                        margin: float = DEFAULT_MARGIN, max_doublings: int = 6,
                        verify: bool = True, n_verify: int = 512):
    """Full pipeline with automatic ``T_max`` growth and one refine-and-retry.

    Returns
    -------
    tables : TestFunctionTables
    report : PhiReport or None
    """
    G = build_G(F)
    Finv = G.Finv
    if nx % 2 == 0:
        nx += 1

    def attempt(dt_, nx_, margin_, T):
        for _ in range(max_doublings + 1):
            etab = solve_E(F, G, T, dt_)
            try:
                ptab = psi_envelopes(F, etab, np.linspace(-R, R, nx_), R, Finv)
            except TailBoundUnverified:
                T *= 2
                continue
            break
        else:
            raise TailBoundUnverified(f"tail bound not certified up to T_max = {T:g}")
        ftab = build_f(etab, F)
        gtab = build_g(ptab, margin_)
        tab = assemble_phi(F, G, etab, ftab, gtab, ptab)
        if not verify:
            return tab, None
        return tab, verify_phi(tab, n_verify, n_verify, strict=False)

    tab, rep = attempt(dt, nx, margin, T_max)
    if rep is not None and not rep.ok:
        tab, rep = attempt(dt / 2, 2 * nx - 1, 2 * margin, tab.T_max)
        if not rep.ok:
            raise VerificationFailed(rep)
    return tab, rep
