"""Set limiters, limited flux functions and effective boundary fluxes.

For a coercive Hamiltonian ``H`` and a point ``p`` we use

* ``p_minus = sup{q < p : H(q) >= H(p)}``
* ``p_plus  = inf{q > p : H(q) <= H(p)}`` (``+inf`` when the set is empty)

A set limiter is a finite list of points ``p_alpha``, each carrying its
plateau ``[p_alpha_minus, p_alpha_plus]`` and level ``H(p_alpha)``.  The
limited flux ``F_A`` equals the level on every plateau and ``H`` elsewhere.

Given a non-increasing boundary function ``F`` (``F -> +inf`` on the left),
:func:`compute_set_limiter` finds the unique limiter ``A_F`` whose flux is
the effective boundary condition.  All searches are exact scans over the
pieces of the PL data; no sampling is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidLimiter, NotCoercive
from .pwl import PLFunction, check_coercive, check_semicoercive, crossings, tol

__all__ = [
    "SlopeBounds",
    "LimiterPoint",
    "SetLimiter",
    "EffectiveFlux",
    "ValidationReport",
    "slope_bounds",
    "validate_set_limiter",
    "build_flux",
    "compute_set_limiter",
    "oracle_set_limiter",
    "compute_A0",
    "effective_flux",
]

INF = math.inf


@dataclass(frozen=True)
class SlopeBounds:
    p_minus: float
    p_plus: float


@dataclass(frozen=True)
class LimiterPoint:
    p_alpha: float
    p_minus: float
    p_plus: float
    level: float

    @property
    def plateau(self) -> tuple[float, float]:
        return (self.p_minus, self.p_plus)


@dataclass(frozen=True)
class SetLimiter:
    """Ordered collection of :class:`LimiterPoint` (ascending ``p_alpha``)."""

    points: tuple[LimiterPoint, ...] = ()

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda a: a.p_alpha))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[LimiterPoint]:
        return iter(self.points)

    def __getitem__(self, i) -> LimiterPoint:
        return self.points[i]

    @classmethod
    def from_tuples(cls, rows: Sequence[Sequence[float]]) -> "SetLimiter":
        """Build from ``(p_alpha, p_minus, p_plus, level)`` rows."""
        return cls(tuple(LimiterPoint(*map(float, r)) for r in rows))

    def same_plateaus(self, other: "SetLimiter", atol: float = 1e-9) -> bool:
        """Equal plateaus and levels (representatives may differ)."""
        if len(self) != len(other):
            return False
        a = sorted(self.points, key=lambda r: r.p_minus)
        b = sorted(other.points, key=lambda r: r.p_minus)
        for x, y in zip(a, b):
            for u, v in ((x.p_minus, y.p_minus), (x.p_plus, y.p_plus), (x.level, y.level)):
                if u == v:
                    continue
                if not (math.isfinite(u) and math.isfinite(v)) or abs(u - v) > atol * max(1.0, abs(u)):
                    return False
        return True

    def to_rows(self) -> list[tuple[float, float, float, float]]:
        return [(a.p_alpha, a.p_minus, a.p_plus, a.level) for a in self.points]


@dataclass(frozen=True)
class EffectiveFlux:
    flux: PLFunction
    limiter: SetLimiter

    def __call__(self, p):
        return self.flux(p)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


# ---------------------------------------------------------------------------
# exact scans

def _first_right(f: PLFunction, p: float, kind: str) -> float:
    """``inf{q > p : f(q) <= f(p)}`` (kind ``'le'``) or ``... > f(p)`` (``'gt'``)."""
    level = f.value(p)
    eps = tol(level)
    s0 = f.slope_right_of(p)
    if kind == "le":
        if s0 <= 0:
            return p
    elif s0 > 0:
        return p
    a, ya = p, level
    xs = f.xs
    start = int(np.searchsorted(xs, p, side="right"))
    for k in range(start, xs.size):
        b, yb = float(xs[k]), float(f.ys[k])
        if kind == "le":
            if a > p and ya <= level + eps:
                return a
            if yb <= level + eps:
                if yb >= level:
                    return b
                return a + (level - ya) * (b - a) / (yb - ya)
        else:
            if yb > level + eps:
                return max(a, a + (level - ya) * (b - a) / (yb - ya))
        a, ya = b, yb
    sr = f.right_slope
    if kind == "le":
        if a > p and ya <= level + eps:
            return a
        return a + (level - ya) / sr if sr < 0 else INF
    return max(a, a + (level - ya) / sr) if sr > 0 else INF


def _mirror(H: PLFunction) -> PLFunction:
    # K(r) = -H(-r); right scans of K are left scans of H
    return H.reflected().negated()


def _bounds(H: PLFunction, K: PLFunction, p: float) -> SlopeBounds:
    return SlopeBounds(-_first_right(K, -p, "le"), _first_right(H, p, "le"))


def slope_bounds(H: PLFunction, p: float) -> SlopeBounds:
    """Exact ``(p_minus, p_plus)`` of ``p`` for a coercive ``H``.

    Examples
    --------
    >>> from hjhalf.presets import preset
    >>> slope_bounds(preset("W"), -0.5)
    SlopeBounds(p_minus=-1.5, p_plus=0.5)
    """
    if not check_coercive(H):
        raise NotCoercive("H must have left tail slope < 0 < right tail slope")
    return _bounds(H, _mirror(H), float(p))


# ---------------------------------------------------------------------------
# validation and flux construction

def _open_meet(a0, a1, b0, b1) -> bool:
    lo, hi = max(a0, b0), min(a1, b1)
    return hi - lo > tol(lo if math.isfinite(lo) else 0.0)


def validate_set_limiter(A: SetLimiter, H: PLFunction) -> ValidationReport:
    """Check the three set-limiter conditions on a finite probe set."""
    if not check_coercive(H):
        raise NotCoercive("H must be coercive")
    K = _mirror(H)
    rep = ValidationReport()
    pts = list(A)
    for a in pts:
        sb = _bounds(H, K, a.p_alpha)
        ok_m = abs(sb.p_minus - a.p_minus) <= 1e-7 * max(1.0, abs(a.p_minus))
        ok_p = (sb.p_plus == a.p_plus) or (
            math.isfinite(sb.p_plus) and math.isfinite(a.p_plus)
            and abs(sb.p_plus - a.p_plus) <= 1e-7 * max(1.0, abs(a.p_plus)))
        if not (ok_m and ok_p):
            rep.violations.append(
                f"bounds: stored plateau of p_alpha={a.p_alpha:.15g} differs from "
                f"[{sb.p_minus:.15g}, {sb.p_plus:.15g}]")
        if abs(H.value(a.p_alpha) - a.level) > 1e-7 * max(1.0, abs(a.level)):
            rep.violations.append(f"level: H({a.p_alpha:.15g}) != {a.level:.15g}")
        if a.p_minus == a.p_plus:
            rep.violations.append(f"condition 1: degenerate plateau at p_alpha={a.p_alpha:.15g}")
    for a, b in zip(pts, pts[1:]):
        if b.level > a.level + tol(a.level):
            rep.violations.append(
                f"condition 2: level rises from {a.level:.15g} at {a.p_alpha:.15g} "
                f"to {b.level:.15g} at {b.p_alpha:.15g}")
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            if _open_meet(a.p_minus, a.p_plus, b.p_minus, b.p_plus):
                rep.violations.append(
                    f"disjointness: plateaus of {a.p_alpha:.15g} and {b.p_alpha:.15g} overlap")

    probes = set(H.xs.tolist())
    for a in pts:
        probes.update(x for x in (a.p_alpha, a.p_minus, a.p_plus) if math.isfinite(x))
    sp = sorted(probes)
    probes.update(0.5 * (u + v) for u, v in zip(sp, sp[1:]))
    probes.update((sp[0] - 1.0, sp[-1] + 1.0))
    for p in sorted(probes):
        sb = _bounds(H, K, p)
        if sb.p_minus < p - tol(p):
            if not any(_open_meet(sb.p_minus, p, a.p_minus, a.p_plus) for a in pts):
                rep.violations.append(
                    f"condition 3 (covering): no plateau meets ({sb.p_minus:.15g}, {p:.15g})")
        if p + tol(p) < sb.p_plus:
            if not any(_open_meet(p, sb.p_plus, a.p_minus, a.p_plus) for a in pts):
                rep.violations.append(
                    f"condition 3 (covering): no plateau meets ({p:.15g}, {sb.p_plus:.15g})")
    return rep


def plateau_flux(A: SetLimiter, H: PLFunction) -> PLFunction:
    plats = [(a.p_minus, a.p_plus, a.level) for a in A]
    pts = []
    for x, y in zip(H.xs.tolist(), H.ys.tolist()):
        if not any(lo <= x <= hi for lo, hi, _ in plats):
            pts.append((x, y))
    for lo, hi, lev in plats:
        pts.append((lo, lev))
        if math.isfinite(hi):
            pts.append((hi, lev))
    right = 0.0 if any(math.isinf(hi) for _, hi, _ in plats) else H.right_slope
    return PLFunction.from_points(pts, H.left_slope, right)


def build_flux(A: SetLimiter, H: PLFunction) -> EffectiveFlux:
    """The ``A``-limited flux: plateau levels on plateaus, ``H`` elsewhere.

    Raises
    ------
    InvalidLimiter
        When :func:`validate_set_limiter` reports any violation.
    """
    rep = validate_set_limiter(A, H)
    if not rep.valid:
        raise InvalidLimiter(rep)
    return EffectiveFlux(plateau_flux(A, H), A)


# ---------------------------------------------------------------------------
# classification

def _candidates(H: PLFunction, F: PLFunction) -> list[float]:
    hx = H.xs
    raw = set(hx.tolist()) | set(F.xs.tolist()) | set(crossings(F, H))
    out = set()
    for p in raw:
        k = int(np.argmin(np.abs(hx - p)))
        out.add(float(hx[k]) if abs(hx[k] - p) <= 1e-12 * max(1.0, abs(p)) else p)
    return sorted(out)


def _dedupe(found: list[LimiterPoint]) -> SetLimiter:
    keep: list[LimiterPoint] = []
    for a in sorted(found, key=lambda r: (abs(r.p_alpha), r.p_alpha)):
        dup = False
        for b in keep:
            same_lo = abs(a.p_minus - b.p_minus) <= 1e-9 * max(1.0, abs(a.p_minus))
            same_hi = a.p_plus == b.p_plus or (
                math.isfinite(a.p_plus) and math.isfinite(b.p_plus)
                and abs(a.p_plus - b.p_plus) <= 1e-9 * max(1.0, abs(a.p_plus)))
            if same_lo and same_hi:
                dup = True
                break
        if not dup:
            keep.append(a)
    return SetLimiter(tuple(keep))


def _check_inputs(H: PLFunction, F: PLFunction) -> None:
    if not check_coercive(H):
        raise NotCoercive("H must be coercive")
    if not check_semicoercive(F):
        raise NotCoercive("F must tend to +inf on the left (left tail slope < 0)")
    if np.any(F.all_slopes > 1e-12):
        raise ValueError("F must be non-increasing")


def compute_set_limiter(H: PLFunction, F: PLFunction) -> SetLimiter:
    """The effective set limiter ``A_F`` of the boundary function ``F``.

    A point qualifies from above when ``p_minus < p``, ``F(p) >= H(p)`` and
    ``F(r) <= H(p)`` at ``r = inf{q > p : H(q) > H(p)}``; from below when
    ``p < p_plus``, ``F(p) <= H(p)`` and ``F(s) >= H(p)`` at
    ``s = sup{q < p : H(q) < H(p)}`` (vacuous if that set is empty).  Only
    breakpoints and crossings of ``F`` and ``H`` can qualify.
    """
    _check_inputs(H, F)
    K = _mirror(H)
    found = []
    for p in _candidates(H, F):
        hp = H.value(p)
        fp = F.value(p)
        eps = tol(hp)
        sb = _bounds(H, K, p)
        ok = False
        if sb.p_minus < p and fp >= hp - eps:
            r = _first_right(H, p, "gt")
            ok = F.value(r) <= hp + eps
        if not ok and p < sb.p_plus and fp <= hp + eps:
            s = -_first_right(K, -p, "gt")
            ok = math.isinf(s) or F.value(s) >= hp - eps
        if ok:
            found.append(LimiterPoint(p, sb.p_minus, sb.p_plus, hp))
    return _dedupe(found)


def compute_A0(H: PLFunction) -> SetLimiter:
    """Points with ``p_minus = p < p_plus`` where ``H(p) = min_{q <= p} H(q)``."""
    if not check_coercive(H):
        raise NotCoercive("H must be coercive")
    K = _mirror(H)
    found = []
    running = INF
    for x, y in zip(H.xs.tolist(), H.ys.tolist()):
        running = min(running, y)
        if y > running + tol(y):
            continue
        sb = _bounds(H, K, x)
        if sb.p_minus == x and x < sb.p_plus:
            found.append(LimiterPoint(x, sb.p_minus, sb.p_plus, y))
    return _dedupe(found)


def effective_flux(H: PLFunction, F: PLFunction) -> EffectiveFlux:
    """``F_{A_F}``: the flux-limited condition equivalent to the boundary function ``F``."""
    A = compute_set_limiter(H, F)
    return build_flux(A, H)


# ---------------------------------------------------------------------------
# brute-force oracle (test use)

def _oracle_range(H: PLFunction, F: PLFunction) -> tuple[float, float]:
    pts = list(H.xs) + list(F.xs) + crossings(F, H)
    K = _mirror(H)
    ext = []
    for p in pts:
        sb = _bounds(H, K, p)
        ext.append(sb.p_minus)
        if math.isfinite(sb.p_plus):
            ext.append(sb.p_plus)
    allp = pts + ext
    return min(allp) - 1.0, max(allp) + 1.0


def oracle_set_limiter(H: PLFunction, F: PLFunction, step: float = 1e-3,
                       lo: float | None = None, hi: float | None = None) -> SetLimiter:
    """Apply the defining conditions of ``A_F`` literally on a uniform grid.

    The universal quantifier over ``q`` is restricted to the same grid.
    Qualifying grid points are clustered (gaps of at most ``2 * step``) and
    each cluster is represented by the member nearest to its centre.
    """
    _check_inputs(H, F)
    if lo is None or hi is None:
        a, b = _oracle_range(H, F)
        lo = a if lo is None else lo
        hi = b if hi is None else hi
    n = int(math.ceil((hi - lo) / step)) + 1
    q = lo + step * np.arange(n)
    Hq = H(q)
    Fq = F(q)
    K = _mirror(H)
    bounds = [_bounds(H, K, float(x)) for x in q]
    qm = np.array([b.p_minus for b in bounds])
    qp = np.array([b.p_plus for b in bounds])
    above = Fq >= Hq - 1e-12
    below = Fq <= Hq + 1e-12

    hits = []
    for i in range(n):
        p, hp = q[i], Hq[i]
        pm, pp = qm[i], qp[i]
        ok = False
        if pm < p and above[i]:
            meet = np.minimum(qp, p) - np.maximum(qm, pm) > 0
            ok = not np.any(above & meet & (Hq > hp + 1e-12))
        if not ok and p < pp and below[i]:
            meet = np.minimum(qp, pp) - np.maximum(qm, p) > 0
            ok = not np.any(below & meet & (Hq < hp - 1e-12))
        if ok:
            hits.append(i)

    clusters: list[list[int]] = []
    for i in hits:
        if clusters and q[i] - q[clusters[-1][-1]] <= 2 * step + 1e-12:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    pts = []
    for c in clusters:
        centre = 0.5 * (q[c[0]] + q[c[-1]])
        j = min(c, key=lambda k: abs(q[k] - centre))
        pts.append(LimiterPoint(float(q[j]), float(qm[j]), float(qp[j]), float(Hq[j])))
    return SetLimiter(tuple(pts))
