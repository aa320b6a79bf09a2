"""Continuous piecewise-linear functions with linear tails.

Every one-dimensional function in the package (Hamiltonians, boundary fluxes,
envelopes, limited fluxes, inverses) is a :class:`PLFunction`.  A function is
stored as its breakpoint table ``(xs, ys)`` plus the slopes of the two
unbounded linear tails; it is continuous by construction.

Comparisons of derived quantities use a relative tolerance of ``RTOL``;
breakpoint data is compared exactly.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import NotMonotone, Unbounded

__all__ = [
    "RTOL",
    "PLFunction",
    "evaluate",
    "inverse",
    "inverse_monotone",
    "crossings",
    "check_coercive",
    "check_semicoercive",
    "decreasing_envelope",
    "bln_flux",
    "sample_function",
    "read_csv",
    "write_csv",
]

RTOL = 1e-9


def tol(scale: float) -> float:
    """Absolute tolerance for comparing quantities of magnitude ``scale``."""
    return RTOL * max(1.0, abs(scale))


@dataclass(frozen=True, eq=False)
class PLFunction:
    """Continuous piecewise-linear function on the real line.

    Parameters
    ----------
    xs : array_like
        Strictly increasing breakpoint coordinates (at least one).
    ys : array_like
        Function values at the breakpoints.
    left_slope, right_slope : float
        Slopes of the linear extensions on ``(-inf, xs[0]]`` and
        ``[xs[-1], +inf)``.
    """

    xs: np.ndarray
    ys: np.ndarray
    left_slope: float
    right_slope: float

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).reshape(-1)
        ys = np.array(self.ys, dtype=float).reshape(-1)
        if xs.size == 0:
            raise ValueError("a PLFunction needs at least one breakpoint")
        if xs.shape != ys.shape:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoint coordinates must be strictly increasing")
        sl, sr = float(self.left_slope), float(self.right_slope)
        if not (math.isfinite(sl) and math.isfinite(sr)):
            raise ValueError("tail slopes must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "left_slope", sl)
        object.__setattr__(self, "right_slope", sr)

    # -- construction -----------------------------------------------------
    @classmethod
    def linear(cls, slope: float, intercept: float = 0.0) -> "PLFunction":
        return cls([0.0], [intercept], slope, slope)

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]], left_slope: float,
                    right_slope: float) -> "PLFunction":
        """Build from ``(x, y)`` pairs, merging coordinates closer than 1e-14."""
        pts = sorted((float(x), float(y)) for x, y in points)
        merged: list[tuple[float, float]] = []
        for x, y in pts:
            if merged and x - merged[-1][0] <= 1e-14 * max(1.0, abs(x)):
                continue
            merged.append((x, y))
        xs, ys = zip(*merged)
        return cls(np.array(xs), np.array(ys), left_slope, right_slope)

    # -- evaluation -------------------------------------------------------
    def __call__(self, p):
        p_arr = np.asarray(p, dtype=float)
        out = np.interp(p_arr, self.xs, self.ys)
        left = p_arr < self.xs[0]
        right = p_arr > self.xs[-1]
        out = np.where(left, self.ys[0] + self.left_slope * (p_arr - self.xs[0]), out)
        out = np.where(right, self.ys[-1] + self.right_slope * (p_arr - self.xs[-1]), out)
        if out.ndim == 0:
            return float(out)
        return out

    def value(self, p: float) -> float:
        """Scalar evaluation without numpy overhead."""
        xs, ys = self.xs, self.ys
        n = xs.size
        if p <= xs[0]:
            return float(ys[0] + self.left_slope * (p - xs[0]))
        if p >= xs[n - 1]:
            return float(ys[n - 1] + self.right_slope * (p - xs[n - 1]))
        k = bisect_right(self._xlist, p)
        x0, x1 = xs[k - 1], xs[k]
        y0, y1 = ys[k - 1], ys[k]
        return float(y0 + (y1 - y0) * (p - x0) / (x1 - x0))

    @property
    def _xlist(self) -> list:
        cached = self.__dict__.get("_xlist_cache")
        if cached is None:
            cached = self.xs.tolist()
            object.__setattr__(self, "_xlist_cache", cached)
        return cached

    # -- structure --------------------------------------------------------
    @property
    def segment_slopes(self) -> np.ndarray:
        """Slopes of the finite segments (empty for a single breakpoint)."""
        return np.diff(self.ys) / np.diff(self.xs)

    @property
    def all_slopes(self) -> np.ndarray:
        """Left tail, finite segments, right tail, in order."""
        return np.concatenate(([self.left_slope], self.segment_slopes, [self.right_slope]))

    def slope_right_of(self, p: float) -> float:
        """Slope of the piece containing ``(p, p + eps)``."""
        k = bisect_right(self._xlist, p)
        if k == 0:
            return self.left_slope
        if k == self.xs.size:
            return self.right_slope
        return float((self.ys[k] - self.ys[k - 1]) / (self.xs[k] - self.xs[k - 1]))

    def lipschitz(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        """Largest absolute slope among the pieces meeting ``[lo, hi]``."""
        xs = self.xs
        best = 0.0
        if lo < xs[0]:
            best = abs(self.left_slope)
        if hi > xs[-1]:
            best = max(best, abs(self.right_slope))
        seg = self.segment_slopes
        if seg.size:
            meets = (xs[1:] >= lo) & (xs[:-1] <= hi)
            if np.any(meets):
                best = max(best, float(np.max(np.abs(seg[meets]))))
        return best

    def shifted(self, c: float) -> "PLFunction":
        """The function ``p -> f(p) + c``."""
        return PLFunction(self.xs, self.ys + c, self.left_slope, self.right_slope)

    def negated(self) -> "PLFunction":
        return PLFunction(self.xs, -self.ys, -self.left_slope, -self.right_slope)

    def reflected(self) -> "PLFunction":
        """The function ``p -> f(-p)``."""
        return PLFunction(-self.xs[::-1], self.ys[::-1], -self.right_slope, -self.left_slope)

    def restrict_points(self, lo: float, hi: float) -> list[tuple[float, float]]:
        """Breakpoints in ``(lo, hi)`` as a list of pairs."""
        mask = (self.xs > lo) & (self.xs < hi)
        return list(zip(self.xs[mask].tolist(), self.ys[mask].tolist()))

    def same_as(self, other: "PLFunction") -> bool:
        """Exact equality of the stored data."""
        return (
            self.xs.shape == other.xs.shape
            and bool(np.all(self.xs == other.xs))
            and bool(np.all(self.ys == other.ys))
            and self.left_slope == other.left_slope
            and self.right_slope == other.right_slope
        )

    def __repr__(self):
        pts = ", ".join(f"({x:g}, {y:g})" for x, y in zip(self.xs, self.ys))
        return f"PLFunction([{pts}], left={self.left_slope:g}, right={self.right_slope:g})"


def evaluate(f: PLFunction, p):
    """Value of ``f`` at ``p`` (scalar or array)."""
    return f(p)


def _strict_sign(f: PLFunction) -> int:
    slopes = f.all_slopes
    if np.all(slopes > 0):
        return 1
    if np.all(slopes < 0):
        return -1
    raise NotMonotone("function is not strictly monotone: slopes "
                      + ", ".join(f"{s:g}" for s in slopes))


def inverse(f: PLFunction) -> PLFunction:
    """Inverse of a strictly monotone PL function, itself PL.

    Raises
    ------
    NotMonotone
        If some slope is zero or the slopes change sign.
    """
    sign = _strict_sign(f)
    if sign > 0:
        return PLFunction(f.ys, f.xs, 1.0 / f.left_slope, 1.0 / f.right_slope)
    return PLFunction(f.ys[::-1], f.xs[::-1], 1.0 / f.right_slope, 1.0 / f.left_slope)


def inverse_monotone(f: PLFunction, y: float) -> float:
    """The unique ``p`` with ``f(p) = y`` for strictly monotone ``f``."""
    return inverse(f)(y)


def _snap(points: list[float], anchors: np.ndarray) -> list[float]:
    out = []
    for p in points:
        k = int(np.argmin(np.abs(anchors - p)))
        a = float(anchors[k])
        out.append(a if abs(a - p) <= tol(a) * 1e-3 else p)
    return out


def crossings(f: PLFunction, g: PLFunction) -> list[float]:
    """Points where ``f - g`` changes sign or touches zero, sorted ascending.

    Differences within ``RTOL`` of zero at a breakpoint count as touching; an
    interval of coincidence is reported through its breakpoints.
    """
    xs = np.union1d(f.xs, g.xs)
    d = f(xs) - g(xs)
    scale = np.maximum(np.abs(f(xs)), np.abs(g(xs)))
    d = np.where(np.abs(d) <= RTOL * np.maximum(1.0, scale), 0.0, d)
    out: list[float] = []

    s_left = f.left_slope - g.left_slope
    if d[0] != 0 and s_left != 0:
        root = xs[0] - d[0] / s_left
        if root < xs[0]:
            out.append(float(root))
    for i in range(xs.size):
        if d[i] == 0:
            out.append(float(xs[i]))
        if i + 1 < xs.size and d[i] * d[i + 1] < 0:
            out.append(float(xs[i] - d[i] * (xs[i + 1] - xs[i]) / (d[i + 1] - d[i])))
    s_right = f.right_slope - g.right_slope
    if d[-1] != 0 and s_right != 0:
        root = xs[-1] - d[-1] / s_right
        if root > xs[-1]:
            out.append(float(root))
    out = _snap(sorted(out), xs)
    return sorted(set(out))


def check_coercive(H: PLFunction) -> bool:
    """``H(p) -> +inf`` as ``|p| -> inf``."""
    return H.left_slope < 0 < H.right_slope


def check_semicoercive(F: PLFunction) -> bool:
    """``F(p) -> +inf`` as ``p -> -inf``."""
    return F.left_slope < 0


def _running_min_from(f: PLFunction, start: float):
    """Breakpoints and right tail slope of ``p -> min_{[start, p]} f`` on ``p >= start``."""
    m = f.value(start)
    pts = [(start, m)]
    ax, ay = start, m
    for bx, by in f.restrict_points(start, math.inf):
        if by < m:
            # the segment from (ax, ay) dips below the running minimum
            c = ax + (m - ay) * (bx - ax) / (by - ay) if ay > m else ax
            if c > pts[-1][0]:
                pts.append((c, m))
            pts.append((bx, by))
            m = by
        ax, ay = bx, by
    s = f.right_slope
    if s < 0:
        if ay > m:
            c = ax + (m - ay) / s
            if c > pts[-1][0]:
                pts.append((c, m))
        return pts, s
    return pts, 0.0


def decreasing_envelope(H: PLFunction) -> PLFunction:
    """Running infimum from the left, ``p -> inf_{q <= p} H(q)``.

    Raises
    ------
    Unbounded
        If the left tail rises (the infimum is then ``-inf``).
    """
    if H.left_slope > 0:
        raise Unbounded("left tail slope is positive, running infimum is -inf")
    x0 = float(H.xs[0])
    pts, s = _running_min_from(H, x0)
    return PLFunction.from_points(pts, H.left_slope, s)


def bln_flux(H: PLFunction, p0: float) -> PLFunction:
    """Flux ``sup_{[p, p0]} H`` for ``p <= p0`` and ``inf_{[p0, p]} H`` for ``p >= p0``."""
    right_pts, s_right = _running_min_from(H, p0)
    # sup over [p, p0] of H is minus the running min of q -> -H(-q) from -p0
    mirror = H.reflected().negated()
    left_pts, s_left = _running_min_from(mirror, -p0)
    pts = [(-x, -y) for x, y in left_pts] + right_pts
    return PLFunction.from_points(pts, s_left, s_right)


def sample_function(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                    n: int) -> PLFunction:
    """PL interpolant of ``func`` on ``n`` uniform nodes of ``[lo, hi]``.

    The tails continue the first and last chords.
    """
    if n < 2 or not hi > lo:
        raise ValueError("need n >= 2 nodes on a non-degenerate interval")
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(func(xs), dtype=float)
    sl = (ys[1] - ys[0]) / (xs[1] - xs[0])
    sr = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    return PLFunction(xs, ys, sl, sr)


def write_csv(f: PLFunction, path) -> None:
    """Write ``f`` as CSV; numbers use the shortest exact repr so reading round-trips."""
    lines = [
        f"# left_tail_slope={f.left_slope!r}",
        f"# right_tail_slope={f.right_slope!r}",
        "p,value",
    ]
    lines += [f"{x!r},{y!r}" for x, y in zip(f.xs.tolist(), f.ys.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path) -> PLFunction:
    meta = {}
    xs, ys = [], []
    header_seen = False
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = float(val)
            continue
        if not header_seen:
            if line.replace(" ", "") != "p,value":
                raise ValueError(f"{path}:{lineno}: expected header 'p,value', got {line!r}")
            header_seen = True
            continue
        a, _, b = line.partition(",")
        try:
            xs.append(float(a))
            ys.append(float(b))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from None
    missing = {"left_tail_slope", "right_tail_slope"} - meta.keys()
    if missing:
        raise ValueError(f"{path}: missing metadata {sorted(missing)}")
    return PLFunction(xs, ys, meta["left_tail_slope"], meta["right_tail_slope"])
