"""Acceptance suite.

Each test prints one ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts.  Run alone with::

    pytest tests/test_acceptance.py -v
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from hjhalf.limiter import (build_flux, compute_set_limiter, effective_flux,
                            oracle_set_limiter)
from hjhalf.presets import (TESTFN_FLUXES, preset, random_coercive,
                            random_nonincreasing)
from hjhalf.pwl import decreasing_envelope
from hjhalf.solver import SchemeConfig, check_ordering, compare_runs, solve
from hjhalf.testfn import build_G, build_f, build_test_function, solve_E, verify_phi

SEED = 20240611


@pytest.fixture
def report(capsys):
    def emit(label, ok, elapsed, limit, detail=""):
        ok_all = ok and elapsed < limit
        line = f"{'PASS' if ok_all else 'FAIL'} {label}: {detail} time={elapsed:.2f}s (limit {limit}s)"
        with capsys.disabled():
            print("\n" + line)
        return ok_all
    return emit


def _grid(H, F, n):
    pts = np.concatenate((H.xs, F.xs))
    return np.linspace(pts.min() - 5.0, pts.max() + 5.0, n)


def _close(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def test_1_worked_example_classification(report):
    t0 = time.perf_counter()
    H, F = preset("W"), preset("linear")
    A = compute_set_limiter(H, F)
    want = [(-1.5, 0.5, 0.5), (1.0, math.inf, 0.0)]
    got = [(a.p_minus, a.p_plus, a.level) for a in A]
    exact = len(got) == 2 and all(
        all(_close(g, w, 1e-9) for g, w in zip(gp, wp)) for gp, wp in zip(got, want))
    O = oracle_set_limiter(H, F, step=1e-3)
    ogot = [(a.p_minus, a.p_plus, a.level) for a in O]
    oracle = len(ogot) == 2 and all(
        all(_close(g, w, 2e-3) for g, w in zip(gp, wp)) for gp, wp in zip(ogot, want))
    dt = time.perf_counter() - t0
    assert report("1 worked example", exact and oracle, dt, 1.0,
                  f"plateaus={got} oracle_agrees={oracle}")


def test_2_state_constraint_identity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng([SEED, 2])
    Hs = [preset("W"), preset("V")] + [random_coercive(rng) for _ in range(100)]
    worst = 0.0
    for H in Hs:
        env = decreasing_envelope(H)
        x = np.linspace(H.xs[0] - 3.0, H.xs[-1] + 3.0, 1000)
        FA = build_flux(compute_set_limiter(H, env), H).flux
        worst = max(worst, float(np.max(np.abs(FA(x) - env(x)))))
    dt = time.perf_counter() - t0
    assert report("2 state-constraint identity", worst <= 1e-12, dt, 10.0,
                  f"instances={len(Hs)} max_error={worst:.3g}")


def test_3_sandwich_monotone_idempotent(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng([SEED, 3])
    sandwich = monotone = continuity = idem = 0
    for _ in range(100):
        H, F = random_coercive(rng), random_nonincreasing(rng)
        A = compute_set_limiter(H, F)
        FA = build_flux(A, H).flux
        x = _grid(H, F, 10_000)
        h, f, fa = H(x), F(x), FA(x)
        eps = 1e-9 * np.maximum(1.0, np.abs(fa))
        sandwich += bool(np.any((fa < np.minimum(f, h) - eps) | (fa > np.maximum(f, h) + eps)))
        monotone += bool(np.any(np.diff(fa) > 1e-12))
        # no jumps: left and right limits agree at every breakpoint
        jump = FA(FA.xs - 1e-13) - FA(FA.xs + 1e-13)
        continuity += bool(np.any(np.abs(jump) > 1e-9))
        idem += not compute_set_limiter(H, FA).same_plateaus(A)
    dt = time.perf_counter() - t0
    ok = sandwich == monotone == continuity == idem == 0
    assert report("3 sandwich/monotone/idempotent", ok, dt, 30.0,
                  f"pairs=100 sandwich={sandwich} monotone={monotone} "
                  f"continuity={continuity} idempotence={idem}")


def test_4_test_function(report):
    t0 = time.perf_counter()
    F = preset("linear")
    etab = solve_E(F, build_G(F), T_max=100.0, dt=1e-3)

    def exact(t):
        return t if abs(t) <= 1 else math.copysign(math.sqrt(2 * abs(t) - 1), t)

    e_err = max(abs(etab.E_at(t) - exact(t)) for t in (0.5, 1.0, 5.0))
    f1 = float(build_f(etab, F).f_at(1.0))
    checks = {}
    for name in TESTFN_FLUXES:
        tab, _ = build_test_function(preset(name), verify=False)
        rep = verify_phi(tab, n_t=100, n_x=100, strict=False)
        checks[name] = (rep.n_samples >= 10_000 and rep.sign_ok and rep.positivity_ok
                        and rep.superlinearity_ok)
    dt = time.perf_counter() - t0
    ok = e_err <= 1e-6 and abs(f1 - 0.5) <= 1e-6 and all(checks.values())
    assert report("4 test function", ok, dt, 10.0,
                  f"E_err={e_err:.2e} f(1)={f1:.9f} verify_phi={checks}")


def test_5_plane_wave_exact(report):
    t0 = time.perf_counter()
    H = preset("W")
    FA = effective_flux(H, preset("linear"))
    assert FA.flux.value(-2.0) == H.value(-2.0)
    sc = SchemeConfig(cfl_factor=0.5, n_steps=1000, far_slope=-2.0)
    sol = solve(H, FA, lambda x: -2.0 * x, 1 / 64, 16.0, sc, snapshots="all")
    err = float(np.max(np.abs(sol.values + 2.0 * sol.x[None, :] + sol.times[:, None])))
    dt = time.perf_counter() - t0
    assert report("5 plane wave", err <= 1e-12 and sol.n_steps == 1000, dt, 1.0,
                  f"steps={sol.n_steps} max_error={err:.3g}")


def test_6_classification_convergence(report):
    t0 = time.perf_counter()
    tab = compare_runs(preset("W"), preset("linear"), lambda x: np.zeros_like(x),
                       (1 / 40, 1 / 80, 1 / 160, 1 / 320), 4.0)
    dt = time.perf_counter() - t0
    ok = tab.monotone and tab.order >= 0.3
    assert report("6 classification convergence", ok, dt, 60.0,
                  "D=" + ",".join(f"{d:.4g}" for d in tab.D) + f" order={tab.order:.3f}")


def test_7_discrete_comparison(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng([SEED, 7])
    bad, worst = 0, math.inf
    for k in range(10):
        H, F = random_coercive(rng), random_nonincreasing(rng)
        Fbc = F if k % 2 == 0 else effective_flux(H, F)
        shift = rng.uniform(0.0, 0.2)
        rep = check_ordering(lambda x: -np.abs(np.sin(x)), lambda x, s=shift: s + 0 * x,
                             H, Fbc, 0.05, 5.0, SchemeConfig(), n_steps=10_000, strict=False)
        bad += not rep.ok
        worst = min(worst, rep.min_gap)
    H = preset("W")
    neg = check_ordering(lambda x: -np.abs(np.sin(x)), lambda x: 0.1 + 0 * x, H,
                         effective_flux(H, preset("linear")), 0.05, 5.0,
                         SchemeConfig(cfl_factor=2.0, allow_unstable=True),
                         n_steps=10_000, strict=False)
    dt = time.perf_counter() - t0
    ok = bad == 0 and not neg.ok
    assert report("7 discrete comparison", ok, dt, 30.0,
                  f"instances=10 violations={bad} min_gap={worst:.3g} "
                  f"negative_control_violation={neg.first_violation}")
