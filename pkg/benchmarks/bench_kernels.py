"""Time the hot kernels under the compiled and the numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the best-of-N wall time for each backend and
the speedup.  Inputs mirror the default workloads (RK4 march for the test
function, an interior solver run, the psi envelope scan).
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from hjhalf import _backend
from hjhalf.presets import preset
from hjhalf.testfn import build_G


def _unpack(f):
    return f.xs, f.ys, f.left_slope, f.right_slope


def workloads():
    F = preset("asymF")
    G = build_G(F)
    H = preset("W")
    FA = preset("linear")
    rk_args = (0.0, 1e-3, 20_000, *_unpack(F), G.taus, G.cvals, *_unpack(G.Finv))

    dx = 1 / 160
    u0 = -np.abs(np.sin(dx * np.arange(1281)))
    hj_args = (200, *_unpack(H), *_unpack(FA), dx, 0.4 * dx, 1.0, 0, 0.0)

    rng = np.random.default_rng(0)
    E = np.sort(rng.uniform(-10, 10, size=4000))
    Ep = rng.uniform(0.05, 1.0, size=E.size)
    FE = F(E)
    xs = np.linspace(-50, 50, 201)
    ps_args = (E, Ep, FE, xs, *_unpack(G.Finv))

    return {
        "rk4_march (20k steps)": lambda m: m.rk4_march(*rk_args),
        "hj_advance (1281 nodes x 200)": lambda m: m.hj_advance(u0.copy(), *hj_args),
        "psi_envelope (4000 x 201)": lambda m: m.psi_envelope(*ps_args),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _backend.available()
    mods = {name: _backend.get(name) for name in backends}
    print(f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for label, fn in workloads().items():
        times = {}
        for name, mod in mods.items():
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:32s}" + "".join(f"{times[b]:11.4f}s" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
