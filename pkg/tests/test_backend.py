"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from hjhalf import _backend
from hjhalf.presets import preset, random_coercive, random_nonincreasing
from hjhalf.testfn import build_G

py = _backend.get("python")
needs_cython = pytest.mark.skipif("cython" not in _backend.available(),
                                  reason="compiled extension not built")


def unpack(f):
    return f.xs, f.ys, f.left_slope, f.right_slope


def test_selected_backend_is_importable():
    assert _backend.BACKEND in _backend.available()
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_env_var_forces_fallback():
    code = "import hjhalf; print(hjhalf.BACKEND)"
    env = dict(os.environ, HJHALF_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
def test_pl_eval_parity():
    cy = _backend.get("cython")
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = random_coercive(rng)
        p = rng.uniform(-20, 20, size=500)
        p[:f.xs.size] = f.xs
        np.testing.assert_allclose(cy.pl_eval(*unpack(f), p), py.pl_eval(*unpack(f), p),
                                   rtol=1e-15, atol=1e-14)


@needs_cython
@pytest.mark.parametrize("name", ["linear", "asymF", "steepF"])
@pytest.mark.parametrize("dt", [1e-2, -1e-2])
def test_rk4_parity(name, dt):
    cy = _backend.get("cython")
    F = preset(name)
    G = build_G(F)
    args = (0.0, dt, 3000, *unpack(F), G.taus, G.cvals, *unpack(G.Finv))
    for a, b in zip(cy.rk4_march(*args), py.rk4_march(*args)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)


@needs_cython
@pytest.mark.parametrize("mode", [0, 1])
def test_hj_advance_parity(mode):
    cy = _backend.get("cython")
    rng = np.random.default_rng(1)
    for _ in range(10):
        H, F = random_coercive(rng), random_nonincreasing(rng)
        dx = 0.05
        u = np.cumsum(rng.uniform(-2, 2, size=200)) * dx
        sigma = max(H.lipschitz(), F.lipschitz())
        args = (50, *unpack(H), *unpack(F), dx, 0.4 * dx / sigma, sigma, mode, -0.5)
        a, b = u.copy(), u.copy()
        cy.hj_advance(a, *args)
        py.hj_advance(b, *args)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_cython
def test_psi_envelope_parity():
    cy = _backend.get("cython")
    F = preset("asymF")
    Finv = build_G(F).Finv
    rng = np.random.default_rng(2)
    E = np.sort(rng.uniform(-5, 5, size=400))
    Ep = rng.uniform(0.01, 1, size=400)
    FE = F(E)
    x = np.linspace(-10, 10, 101)
    for a, b in zip(cy.psi_envelope(E, Ep, FE, x, *unpack(Finv)),
                    py.psi_envelope(E, Ep, FE, x, *unpack(Finv))):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
