"""Named PL functions and seeded random instance generators."""
from __future__ import annotations

import numpy as np

from .errors import UnknownPreset
from .pwl import PLFunction, sample_function


def _W():
    return PLFunction([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0], -1.0, 1.0)


def _V():
    return PLFunction([0.0], [0.0], -1.0, 1.0)


def _linear():
    return PLFunction([0.0], [0.0], -1.0, -1.0)


def _staircaseF():
    # non-increasing with flat parts on [-1, 0] and [1, 2]
    return PLFunction([-2.0, -1.0, 0.0, 1.0, 2.0], [2.0, 1.0, 1.0, 0.0, 0.0], -1.0, -1.0)


def _steepF():
    return PLFunction([-1.0, 0.0, 1.0], [1.0, 0.0, -1.0], -10.0, -10.0)


def _asymF():
    # strictly decreasing, F(0) = 0, different slopes on each side
    return PLFunction([-2.0, 0.0, 1.0, 3.0], [3.0, 0.0, -0.5, -4.5], -3.0, -1.0)


def _doublewell():
    # (p^2 - 1)^2 / 4 sampled on [-2, 2]
    return sample_function(lambda p: 0.25 * (p * p - 1.0) ** 2, -2.0, 2.0, 81)


PRESETS = {
    "W": _W,
    "V": _V,
    "linear": _linear,
    "staircaseF": _staircaseF,
    "steepF": _steepF,
    "asymF": _asymF,
    "doublewell": _doublewell,
}

#: presets admissible as boundary flux for the test-function builder
TESTFN_FLUXES = ("linear", "asymF", "steepF")


def preset(name: str) -> PLFunction:
    """Look up a named PL function.

    Raises
    ------
    UnknownPreset
        The message lists the available names.
    """
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownPreset(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def _breakpoints(rng, n, spacing=0.5):
    gaps = spacing + rng.uniform(0.0, 1.5, size=n - 1)
    xs = np.concatenate(([0.0], np.cumsum(gaps)))
    return xs - xs.mean() + rng.uniform(-1.0, 1.0)


def random_coercive(rng: np.random.Generator, n_min: int = 3, n_max: int = 9) -> PLFunction:
    """Coercive PL function with ``n_min..n_max`` breakpoints and values in [-5, 5]."""
    n = int(rng.integers(n_min, n_max + 1))
    xs = _breakpoints(rng, n)
    ys = rng.uniform(-5.0, 5.0, size=n)
    sl = -rng.uniform(0.5, 3.0)
    sr = rng.uniform(0.5, 3.0)
    return PLFunction(xs, ys, sl, sr)


def random_nonincreasing(rng: np.random.Generator, n_min: int = 3, n_max: int = 9,
                         flat_prob: float = 0.2) -> PLFunction:
    """Non-increasing PL function, semi-coercive, with values in [-5, 5]."""
    n = int(rng.integers(n_min, n_max + 1))
    xs = _breakpoints(rng, n)
    drops = rng.uniform(0.0, 10.0 / max(n - 1, 1), size=n - 1)
    drops[rng.uniform(size=n - 1) < flat_prob] = 0.0
    ys = 5.0 - np.concatenate(([0.0], np.cumsum(drops)))
    ys = np.clip(ys, -5.0, 5.0)
    ys = np.minimum.accumulate(ys)
    sl = -rng.uniform(0.5, 3.0)
    sr = -rng.uniform(0.0, 3.0) if rng.uniform() < 0.8 else 0.0
    return PLFunction(xs, ys, sl, sr)


def random_decreasing(rng: np.random.Generator, n_min: int = 3, n_max: int = 9) -> PLFunction:
    """Strictly decreasing PL function with ``F(0) = 0``."""
    n = int(rng.integers(n_min, n_max + 1))
    xs = _breakpoints(rng, n)
    slopes = -rng.uniform(0.3, 4.0, size=n - 1)
    ys = np.concatenate(([0.0], np.cumsum(slopes * np.diff(xs))))
    f = PLFunction(xs, ys, -rng.uniform(0.3, 4.0), -rng.uniform(0.3, 4.0))
    return f.shifted(-f.value(0.0))
