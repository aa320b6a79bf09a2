"""Monotone explicit scheme for ``u_t + H(u_x) = 0`` on a truncated half-line.

Interior nodes use the Lax-Friedrichs numerical Hamiltonian

    Hhat(a, b) = H((a + b) / 2) - sigma / 2 * (b - a),

the boundary node ``x = 0`` uses ``u_0 -= dt * F_bc((u_1 - u_0) / dx)`` and
the artificial right end is closed either by a ghost node carrying a fixed
far-field slope (``"far_slope"``, the default, monotone) or by the one-sided
update ``u_N -= dt * H((u_N - u_{N-1}) / dx)`` (``"one_sided"``).  The
domain is enlarged when needed so that ``sigma * T_final < L / 2``: the left
half is then unaffected by the right end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import CFLViolation, OrderingViolated
from .limiter import EffectiveFlux, effective_flux
from .pwl import PLFunction

__all__ = [
    "SchemeConfig",
    "GridSolution",
    "ConvergenceTable",
    "OrderingReport",
    "numerical_hamiltonian",
    "step",
    "estimate_sigma",
    "solve",
    "compare_runs",
    "check_ordering",
    "empirical_order",
]

RIGHT_MODES = {"far_slope": 0, "one_sided": 1}


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme parameters.

    Parameters
    ----------
    sigma : float, optional
        Dissipation of the numerical Hamiltonian; estimated from the data
        when ``None``.
    cfl_factor : float
        ``dt = cfl_factor * dx / sigma`` (before rounding to hit ``T_final``).
    right_boundary : {"far_slope", "one_sided"}
    T_final : float
    n_steps : int, optional
        If given, overrides ``T_final`` with ``n_steps * dt``.
    far_slope : float, optional
        Slope imposed beyond the right end; defaults to the last slope of ``u0``.
    allow_unstable : bool
        Skip the CFL guard (for negative controls only).
    """

    sigma: float | None = None
    cfl_factor: float = 0.4
    right_boundary: str = "far_slope"
    T_final: float = 1.0
    n_steps: int | None = None
    far_slope: float | None = None
    allow_unstable: bool = False

    def __post_init__(self):
        if self.right_boundary not in RIGHT_MODES:
            raise ValueError(f"right_boundary must be one of {sorted(RIGHT_MODES)}")
        if not self.cfl_factor > 0:
            raise ValueError("cfl_factor must be positive")
        if not self.allow_unstable and self.cfl_factor > 1:
            raise CFLViolation(f"cfl_factor={self.cfl_factor:g} > 1 breaks monotonicity")


@dataclass
class GridSolution:
    dx: float
    dt: float
    L: float
    n_steps: int
    sigma: float
    cfl_factor: float
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray  # [snapshot][node]
    steps: np.ndarray   # step index of each snapshot
    boundary_flux: PLFunction
    hamiltonian: PLFunction
    initial: np.ndarray
    right_boundary: str = "far_slope"
    far_slope: float = 0.0
    slope_range: tuple = (-math.inf, math.inf)

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def growth_constant(self) -> float:
        """Smallest ``C`` with ``|u(t, x)| <= C (1 + x)`` over all snapshots."""
        return float(np.max(np.abs(self.values) / (1.0 + self.x)))

    def slopes_within_range(self) -> bool:
        """Whether all recorded differences stayed in the range ``sigma`` was sized for."""
        d = np.diff(self.values, axis=1) / self.dx
        lo, hi = self.slope_range
        return bool(d.min() >= lo - 1e-9 and d.max() <= hi + 1e-9)


def numerical_hamiltonian(p_left, p_right, H: PLFunction, sigma: float):
    """Lax-Friedrichs numerical Hamiltonian (vectorized).

    Consistent (``Hhat(p, p) = H(p)``) and monotone (non-decreasing in
    ``p_left``, non-increasing in ``p_right``) whenever ``sigma`` bounds the
    slopes of ``H`` between the two arguments.
    """
    pl = np.asarray(p_left, dtype=float)
    pr = np.asarray(p_right, dtype=float)
    out = H(0.5 * (pl + pr)) - 0.5 * sigma * (pr - pl)
    return float(out) if np.ndim(out) == 0 else out


def _check_cfl(dx, dt, sigma, allow_unstable):
    if not allow_unstable and dt * sigma > dx * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds dx/sigma={dx / sigma:.6g}")


def step(state, H: PLFunction, F_bc: PLFunction, dx: float, dt: float, sigma: float,
         right_boundary: str = "far_slope", p_right: float | None = None,
         allow_unstable: bool = False) -> np.ndarray:
    """One explicit step; returns a new array.

    With ``right_boundary="far_slope"`` and ``p_right=None`` the ghost slope is
    the current last difference, which is consistent but not monotone in the
    last two nodes; pass a fixed ``p_right`` for a monotone step.
    """
    _check_cfl(dx, dt, sigma, allow_unstable)
    u = np.array(state, dtype=float)
    if u.size < 3:
        raise ValueError("need at least three nodes")
    if p_right is None:
        p_right = (u[-1] - u[-2]) / dx
    return _backend.hj_advance(u, 1, H.xs, H.ys, H.left_slope, H.right_slope,
                               F_bc.xs, F_bc.ys, F_bc.left_slope, F_bc.right_slope,
                               dx, dt, sigma, RIGHT_MODES[right_boundary], float(p_right))


def estimate_sigma(H: PLFunction, F_bc: PLFunction, u0_values: np.ndarray, dx: float,
                   extra_slopes: Sequence[float] = ()) -> tuple[float, tuple[float, float]]:
    """Lipschitz bound of ``H`` and ``F_bc`` over the padded slope range of ``u0``.

    Returns ``(sigma, (lo, hi))``.
    """
    d = np.diff(u0_values) / dx
    pts = [float(d.min()), float(d.max())] + [s for s in extra_slopes if math.isfinite(s)]
    lo, hi = min(pts) - 1.0, max(pts) + 1.0
    sigma = max(H.lipschitz(lo, hi), F_bc.lipschitz(lo, hi), 1e-12)
    return sigma, (lo, hi)


def _as_flux(F_bc) -> tuple[PLFunction, list]:
    if isinstance(F_bc, EffectiveFlux):
        ends = [v for a in F_bc.limiter for v in (a.p_minus, a.p_plus)]
        return F_bc.flux, ends
    return F_bc, []


def _sample(u0, x):
    if callable(u0):
        return np.asarray(u0(x), dtype=float) * np.ones_like(x)
    arr = np.asarray(u0, dtype=float)
    if arr.shape != x.shape:
        raise ValueError(f"u0 array has {arr.size} nodes, grid has {x.size}")
    return arr.copy()


def _grid(dx: float, L: float):
    n = int(math.ceil(L / dx - 1e-9))
    return dx * np.arange(n + 1, dtype=float), n * dx


def _plan(H, F, u0, dx, L, config: SchemeConfig, extra=()):
    """Grid, initial values, sigma, dt, number of steps, far slope."""
    x, L = _grid(dx, L)
    u = _sample(u0, x)
    p_r = config.far_slope if config.far_slope is not None else (u[-1] - u[-2]) / dx
    sigma, rng = estimate_sigma(H, F, u, dx, list(extra) + [p_r])
    if config.sigma is not None:
        sigma = config.sigma
    dt = config.cfl_factor * dx / sigma
    if config.n_steps is not None:
        n_steps = int(config.n_steps)
        T = n_steps * dt
    else:
        T = config.T_final
        n_steps = max(1, int(math.ceil(T / dt - 1e-9)))
        dt = T / n_steps
    # keep the right end out of the left half
    if sigma * T >= L / 2:
        x, L = _grid(dx, 2.05 * sigma * T + 2 * dx)
        u = _sample(u0, x)
    return x, L, u, sigma, rng, dt, n_steps, float(p_r)


def solve(H: PLFunction, F_bc, u0, dx: float, L: float,
          config: SchemeConfig = SchemeConfig(), snapshots: int | str = 11) -> GridSolution:
    """March from ``u0`` to the final time.

    Parameters
    ----------
    F_bc : PLFunction or EffectiveFlux
        Boundary function at ``x = 0``; plateau endpoints of an
        :class:`EffectiveFlux` are folded into the ``sigma`` estimate.
    u0 : callable or ndarray
        Initial data, sampled at ``x_i = i dx`` if callable.
    snapshots : int or "all"
        Number of evenly spaced stored time levels (first and last included).
    """
    F, extra = _as_flux(F_bc)
    x, L, u, sigma, rng, dt, n_steps, p_r = _plan(H, F, u0, dx, L, config, extra)
    _check_cfl(dx, dt, sigma, config.allow_unstable)
    if snapshots == "all":
        marks = np.arange(n_steps + 1)
    else:
        marks = np.unique(np.round(np.linspace(0, n_steps, max(2, int(snapshots)))).astype(int))
    mode = RIGHT_MODES[config.right_boundary]
    u0v = u.copy()
    out = np.empty((marks.size, u.size))
    out[0] = u
    done = 0
    for k, m in enumerate(marks[1:], start=1):
        _backend.hj_advance(u, int(m - done), H.xs, H.ys, H.left_slope, H.right_slope,
                            F.xs, F.ys, F.left_slope, F.right_slope, dx, dt, sigma, mode, p_r)
        done = m
        out[k] = u
    return GridSolution(dx, dt, L, n_steps, sigma, config.cfl_factor, x, marks * dt, out, marks,
                        F, H, u0v, config.right_boundary, p_r, rng)


# ---------------------------------------------------------------------------
# refinement study

def empirical_order(dxs, D) -> float:
    """Least-squares slope of ``log D`` against ``log dx``."""
    dxs = np.asarray(dxs, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.any(D <= 0):
        return math.inf if np.all(D <= 0) else math.nan
    return float(np.polyfit(np.log(dxs), np.log(D), 1)[0])


@dataclass
class ConvergenceTable:
    dx: list
    D: list
    pairwise: list  # order between consecutive levels (nan for the first)
    order: float

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.D, self.D[1:]))

    def rows(self):
        return list(zip(self.dx, self.D, self.pairwise))


def compare_runs(H: PLFunction, F: PLFunction, u0, dxs=(1 / 40, 1 / 80, 1 / 160, 1 / 320),
                 L: float = 4.0, config: SchemeConfig = SchemeConfig()) -> ConvergenceTable:
    """Distance between runs with boundary function ``F`` and with ``F_{A_F}``.

    ``D(dx)`` is the max over all time levels and all nodes with ``x <= L/2``
    of ``|u_F - u_{F_A}|``.  Both runs share ``sigma``, ``dt`` and the grid.
    """
    FA = effective_flux(H, F)
    D = []
    for dx in dxs:
        x, Lg = _grid(dx, L)
        u = _sample(u0, x)
        p_r = config.far_slope if config.far_slope is not None else (u[-1] - u[-2]) / dx
        ends = [v for a in FA.limiter for v in (a.p_minus, a.p_plus)]
        s1, _ = estimate_sigma(H, F, u, dx, ends + [p_r])
        s2, _ = estimate_sigma(H, FA.flux, u, dx, ends + [p_r])
        cfg = replace(config, sigma=config.sigma or max(s1, s2), far_slope=p_r)
        a = solve(H, F, u0, dx, L, cfg, snapshots="all")
        b = solve(H, FA.flux, u0, dx, L, cfg, snapshots="all")
        left = a.x <= L / 2 + 1e-12
        D.append(float(np.max(np.abs(a.values[:, left] - b.values[:, left]))))
    pair = [math.nan] + [
        math.log(D[i - 1] / D[i]) / math.log(dxs[i - 1] / dxs[i]) if D[i] > 0 and D[i - 1] > 0
        else math.nan for i in range(1, len(D))]
    return ConvergenceTable(list(map(float, dxs)), D, pair, empirical_order(dxs, D))


# ---------------------------------------------------------------------------
# discrete comparison

@dataclass
class OrderingReport:
    n_steps: int
    min_gap: float
    first_violation: tuple | None = None
    violations: int = 0
    tol: float = 1e-12
    history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def check_ordering(u0_low, u0_high, H: PLFunction, F_bc, dx: float, L: float,
                   config: SchemeConfig = SchemeConfig(), n_steps: int = 10_000,
                   far_slope: float = 0.0, strict: bool = True,
                   tol: float = 1e-12) -> OrderingReport:
    """Advance both data with identical parameters, checking ``u_high >= u_low`` each step.

    Both runs share the far-field slope ``far_slope`` and ``sigma`` (the
    larger of the two estimates).  NaN or inf counts as a violation.

    Raises
    ------
    OrderingViolated
        When ``strict`` and a violation occurs.
    """
    F, extra = _as_flux(F_bc)
    x, _ = _grid(dx, L)
    lo = _sample(u0_low, x)
    hi = _sample(u0_high, x)
    if np.any(lo > hi):
        raise ValueError("u0_low must not exceed u0_high")
    s1, _ = estimate_sigma(H, F, lo, dx, list(extra) + [far_slope])
    s2, _ = estimate_sigma(H, F, hi, dx, list(extra) + [far_slope])
    sigma = config.sigma if config.sigma is not None else max(s1, s2)
    dt = config.cfl_factor * dx / sigma
    _check_cfl(dx, dt, sigma, config.allow_unstable)
    mode = RIGHT_MODES[config.right_boundary]
    args = (H.xs, H.ys, H.left_slope, H.right_slope, F.xs, F.ys, F.left_slope, F.right_slope,
            dx, dt, sigma, mode, float(far_slope))
    rep = OrderingReport(n_steps, float(np.min(hi - lo)), tol=tol)
    with np.errstate(all="ignore"):
        for s in range(1, n_steps + 1):
            _backend.hj_advance(lo, 1, *args)
            _backend.hj_advance(hi, 1, *args)
            gap = hi - lo
            bad = ~(gap >= -tol)
            g = float(np.nanmin(gap)) if np.any(np.isfinite(gap)) else -math.inf
            rep.min_gap = min(rep.min_gap, g)
            if np.any(bad):
                rep.violations += 1
                if rep.first_violation is None:
                    rep.first_violation = (s, int(np.flatnonzero(bad)[0]))
                if not np.all(np.isfinite(gap)):
                    break
    if strict and not rep.ok:
        raise OrderingViolated(rep)
    return rep
