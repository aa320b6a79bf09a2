"""Experiment drivers behind the CLI subcommands.

Each ``run_*`` function takes a :class:`~hjhalf.config.RunConfig` and an
output directory, writes its files and returns an exit status (0 or 1).
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Callable

import numpy as np

from .config import RunConfig, make_u0
from .limiter import (plateau_flux, build_flux, compute_A0, compute_set_limiter,
                      effective_flux, oracle_set_limiter, validate_set_limiter, LimiterPoint,
                      SetLimiter)
from .presets import TESTFN_FLUXES, preset, random_coercive, random_nonincreasing
from .pwl import crossings, decreasing_envelope, write_csv
from .solver import SchemeConfig, check_ordering, compare_runs, solve
from .testfn import build_test_function

__all__ = ["fmt", "run_limiter", "run_testfn", "run_solve", "run_converge", "run_verify",
           "PROPERTIES"]


def fmt(v) -> str:
    """15 significant digits; infinities as ``inf``/``-inf``."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.15g}"


def _write_table(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(fmt(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sandwich_violations(H, F, FA, x) -> int:
    h, f, fa = H(x), F(x), FA(x)
    eps = 1e-9 * np.maximum(1.0, np.abs(fa))
    return int(np.sum((fa < np.minimum(f, h) - eps) | (fa > np.maximum(f, h) + eps)))


def _sample_points(H, F, n=10_000):
    pts = np.concatenate((H.xs, F.xs))
    lo, hi = pts.min() - 5.0, pts.max() + 5.0
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# subcommands

def run_limiter(cfg: RunConfig, out: Path) -> int:
    H, F = cfg.H, cfg.F
    A = compute_set_limiter(H, F)
    rep = validate_set_limiter(A, H)
    eff = build_flux(A, H) if rep.valid else None
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "limiter.csv", "p_alpha,p_minus,p_plus,level", A.to_rows())
    lines = [f"hamiltonian {cfg.hamiltonian}", f"flux {cfg.flux}", f"points {len(A)}"]
    lines += [f"validation {'PASS' if rep.valid else 'FAIL'}"]
    lines += [f"  {v}" for v in rep.violations]
    nv = nondec = 0
    if eff is not None:
        write_csv(eff.flux, out / "effective_flux.csv")
        x = _sample_points(H, F)
        nv = _sandwich_violations(H, F, eff.flux, x)
        lines.append(f"sandwich {'PASS' if nv == 0 else 'FAIL'} samples={x.size} violations={nv}")
        nondec = int(np.sum(np.diff(eff.flux(x)) > 1e-12))
        lines.append(f"non_increasing {'PASS' if nondec == 0 else 'FAIL'} violations={nondec}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    ok = rep.valid and eff is not None and nv == 0 and nondec == 0
    return 0 if ok else 1


def run_testfn(cfg: RunConfig, out: Path) -> int:
    F = cfg.F
    tab, rep = build_test_function(F, dt=cfg.dt, T_max=cfg.T_max, R=cfg.R, nx=cfg.nx,
                                   margin=cfg.margin, n_verify=cfg.samples)
    out.mkdir(parents=True, exist_ok=True)
    e = tab.etab
    _write_table(out / "E.csv", "t,E", zip(e.t, e.E))
    _write_table(out / "f.csv", "t,f", zip(tab.ftab.t, tab.ftab.f))
    _write_table(out / "g.csv", "x,g", zip(tab.gtab.x, tab.gtab.g))
    p = tab.psi_tab
    lines = [
        f"flux {cfg.flux}",
        f"T_max {fmt(tab.T_max)} dt {fmt(e.dt)} R {fmt(tab.R)} nx {tab.gtab.x.size}",
        f"margin {fmt(tab.gtab.margin)}",
        f"certified_window {fmt(p.t_lo)} {fmt(p.t_hi)}",
        rep.summary(),
    ]
    (out / "phi_check.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0 if rep.ok else 1


def _boundary(cfg: RunConfig, H, F):
    return effective_flux(H, F) if cfg.boundary == "effective" else F


def _scheme(cfg: RunConfig, **kw) -> SchemeConfig:
    base = dict(cfl_factor=cfg.cfl_factor, right_boundary=cfg.right_boundary,
                T_final=cfg.T_final, far_slope=cfg.far_slope)
    base.update(kw)
    return SchemeConfig(**base)


def run_solve(cfg: RunConfig, out: Path) -> int:
    H, F = cfg.H, cfg.F
    sol = solve(H, _boundary(cfg, H, F), make_u0(cfg.u0), cfg.dx, cfg.L, _scheme(cfg),
                snapshots=cfg.snapshots)
    out.mkdir(parents=True, exist_ok=True)
    rows = ((t, x, u) for t, vals in zip(sol.times, sol.values) for x, u in zip(sol.x, vals))
    _write_table(out / "solution.csv", "t,x,u", rows)
    meta = [
        f"dx {fmt(sol.dx)}",
        f"dt {fmt(sol.dt)}",
        f"sigma {fmt(sol.sigma)}",
        f"cfl {fmt(sol.dt * sol.sigma / sol.dx)}",
        f"cfl_factor {fmt(sol.cfl_factor)}",
        f"L {fmt(sol.L)}",
        f"n_steps {sol.n_steps}",
        f"right_boundary {sol.right_boundary}",
        f"far_slope {fmt(sol.far_slope)}",
        f"boundary {cfg.boundary}",
        f"growth_constant {fmt(sol.growth_constant())}",
        f"slopes_within_range {sol.slopes_within_range()}",
    ]
    (out / "meta.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")
    return 0


def run_converge(cfg: RunConfig, out: Path) -> int:
    H, F = cfg.H, cfg.F
    tab = compare_runs(H, F, make_u0(cfg.u0), cfg.dxs, cfg.L, _scheme(cfg))
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "rates.csv", "dx,D,empirical_order", tab.rows())
    lines = [f"least_squares_order {fmt(tab.order)}", f"monotone {tab.monotone}"]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# verification suite

def _pairs(seed, tag, n):
    rng = np.random.default_rng([seed, tag])
    return [(random_coercive(rng), random_nonincreasing(rng)) for _ in range(n)]


def _prop_worked_example(cfg, brk):
    H, F = preset("W"), preset("linear")
    A = compute_set_limiter(H, F)
    want = [(-1.5, 0.5, 0.5), (1.0, math.inf, 0.0)]
    got = [(a.p_minus, a.p_plus, a.level) for a in A]
    ok = len(got) == 2 and all(
        abs(g[0] - w[0]) <= 1e-9 and (g[1] == w[1] or abs(g[1] - w[1]) <= 1e-9)
        and abs(g[2] - w[2]) <= 1e-9 for g, w in zip(got, want))
    return ok, f"plateaus={len(got)}"


def _prop_sandwich(cfg, brk):
    bad = 0
    for i, (H, F) in enumerate(_pairs(cfg.seed, 1, cfg.n_random)):
        A = compute_set_limiter(H, F)
        if "sandwich" in brk and i == 0 and len(A):
            a = A[0]
            A = SetLimiter((LimiterPoint(a.p_alpha, a.p_minus, a.p_plus, a.level + 1.0),)
                           + A.points[1:])
        FA = plateau_flux(A, H)
        bad += _sandwich_violations(H, F, FA, _sample_points(H, F)) > 0
    return bad == 0, f"instances={cfg.n_random} violating_instances={bad}"


def _prop_monotone(cfg, brk):
    bad = 0
    for H, F in _pairs(cfg.seed, 1, cfg.n_random):
        FA = effective_flux(H, F).flux
        x = _sample_points(H, F)
        v = FA(x)
        ends = FA(FA.xs - 1e-13) - FA(FA.xs + 1e-13)
        bad += bool(np.any(np.diff(v) > 1e-12) or np.any(np.abs(ends) > 1e-9))
    return bad == 0, f"instances={cfg.n_random} violating_instances={bad}"


def _prop_idempotence(cfg, brk):
    bad = 0
    for H, F in _pairs(cfg.seed, 1, cfg.n_random):
        A = compute_set_limiter(H, F)
        FA = build_flux(A, H).flux
        bad += not compute_set_limiter(H, FA).same_plateaus(A)
    return bad == 0, f"instances={cfg.n_random} violating_instances={bad}"


def _prop_disjoint(cfg, brk):
    bad = 0
    for H, F in _pairs(cfg.seed, 1, cfg.n_random):
        bad += not validate_set_limiter(compute_set_limiter(H, F), H).valid
    return bad == 0, f"instances={cfg.n_random} invalid_limiters={bad}"


def _prop_A0(cfg, brk):
    rng = np.random.default_rng([cfg.seed, 2])
    Hs = [preset("W"), preset("V")] + [random_coercive(rng) for _ in range(cfg.n_random)]
    worst = 0.0
    bad = 0
    for H in Hs:
        env = decreasing_envelope(H)
        A = compute_set_limiter(H, env)
        x = np.linspace(H.xs[0] - 3, H.xs[-1] + 3, 1000)
        worst = max(worst, float(np.max(np.abs(build_flux(A, H).flux(x) - env(x)))))
        bad += not compute_A0(H).same_plateaus(A)
    return worst <= 1e-12 and bad == 0, f"instances={len(Hs)} max_error={fmt(worst)} A0_mismatch={bad}"


def _prop_oracle(cfg, brk):
    n = min(cfg.n_random, 20)
    bad = 0
    for H, F in _pairs(cfg.seed, 3, n):
        step = 1e-2
        A = compute_set_limiter(H, F)
        O = oracle_set_limiter(H, F, step=step)
        x = _sample_points(H, F, 4000)
        diff = np.max(np.abs(build_flux(A, H).flux(x) - plateau_flux(O, H)(x)))
        bad += len(A) != len(O) or diff > 2 * step * H.lipschitz()
    return bad == 0, f"instances={n} disagreements={bad}"


def _prop_envelope(cfg, brk):
    rng = np.random.default_rng([cfg.seed, 4])
    bad = 0
    for _ in range(cfg.n_random):
        H = random_coercive(rng)
        env = decreasing_envelope(H)
        x = np.linspace(H.xs[0] - 3, H.xs[-1] + 3, 1000)
        e = env(x)
        bad += bool(np.any(np.diff(e) > 1e-12) or np.any(e > H(x) + 1e-12)
                    or np.max(np.abs(decreasing_envelope(env)(x) - e)) > 1e-12)
    return bad == 0, f"instances={cfg.n_random} violating_instances={bad}"


def _prop_crossings(cfg, brk):
    rng = np.random.default_rng([cfg.seed, 5])
    bad = 0
    for _ in range(cfg.n_random):
        f, g = random_coercive(rng), random_nonincreasing(rng)
        cr = crossings(f, g)
        x = np.linspace(min(f.xs[0], g.xs[0]) - 10, max(f.xs[-1], g.xs[-1]) + 10, 10_000)
        d = f(x) - g(x)
        sgn = np.sign(d)
        change = np.flatnonzero(sgn[1:] * sgn[:-1] < 0)
        for k in change:
            if not any(x[k] <= c <= x[k + 1] for c in cr):
                bad += 1
                break
    return bad == 0, f"instances={cfg.n_random} missed_sign_changes={bad}"


def _prop_plane_wave(cfg, brk):
    H, F = preset("W"), preset("linear")
    FA = effective_flux(H, F)
    sc = SchemeConfig(cfl_factor=0.5, n_steps=1000, far_slope=-2.0)
    sol = solve(H, FA, lambda x: -2.0 * x, 1 / 64, 16.0, sc, snapshots="all")
    err = float(np.max(np.abs(sol.values + 2.0 * sol.x[None, :] + sol.times[:, None])))
    return err <= 1e-12, f"steps=1000 max_error={fmt(err)}"


def _prop_ordering(cfg, brk):
    rng = np.random.default_rng([cfg.seed, 6])
    worst = math.inf
    bad = 0
    for k in range(10):
        H, F = random_coercive(rng), random_nonincreasing(rng)
        Fbc = F if k % 2 == 0 else effective_flux(H, F)
        shift = rng.uniform(0.0, 0.2)
        rep = check_ordering(lambda x: -np.abs(np.sin(x)), lambda x, s=shift: s + 0 * x,
                             H, Fbc, 0.05, 5.0, SchemeConfig(), n_steps=10_000, strict=False)
        bad += not rep.ok
        worst = min(worst, rep.min_gap)
    return bad == 0, f"instances=10 steps=10000 violating_instances={bad} min_gap={fmt(worst)}"


def _prop_ordering_negative(cfg, brk):
    H, F = preset("W"), preset("linear")
    FA = effective_flux(H, F)
    rep = check_ordering(lambda x: -np.abs(np.sin(x)), lambda x: 0.1 + 0 * x, H, FA, 0.05, 5.0,
                         SchemeConfig(cfl_factor=2.0, allow_unstable=True), n_steps=10_000,
                         strict=False)
    return not rep.ok, f"cfl_factor=2 first_violation={rep.first_violation}"


def _prop_convergence(cfg, brk):
    tab = compare_runs(preset("W"), preset("linear"), lambda x: 0 * x, cfg.dxs, 4.0)
    ok = tab.monotone and tab.order >= 0.3
    return ok, "D=" + ";".join(fmt(d) for d in tab.D) + f" order={fmt(tab.order)}"


def _prop_testfn(name):
    def run(cfg, brk):
        tab, rep = build_test_function(preset(name), dt=cfg.dt, T_max=cfg.T_max, R=cfg.R,
                                       nx=cfg.nx, margin=cfg.margin, n_verify=cfg.samples,
                                       verify=True)
        return rep.ok, (f"samples={rep.n_samples} max_right={fmt(rep.sign_max_right)} "
                        f"min_left={fmt(rep.sign_min_left)} min_phi={fmt(rep.positivity_min)}")
    return run


PROPERTIES: dict[str, Callable] = {
    "limiter.A0_envelope": _prop_A0,
    "limiter.disjointness": _prop_disjoint,
    "limiter.idempotence": _prop_idempotence,
    "limiter.monotone_continuous": _prop_monotone,
    "limiter.oracle_agreement": _prop_oracle,
    "limiter.sandwich": _prop_sandwich,
    "limiter.worked_example": _prop_worked_example,
    "pwl.crossings_bruteforce": _prop_crossings,
    "pwl.envelope": _prop_envelope,
    "solver.convergence": _prop_convergence,
    "solver.ordering": _prop_ordering,
    "solver.ordering_negative_control": _prop_ordering_negative,
    "solver.plane_wave": _prop_plane_wave,
}
for _name in TESTFN_FLUXES:
    PROPERTIES[f"testfn.verify_phi.{_name}"] = _prop_testfn(_name)


def run_verify(cfg: RunConfig, out: Path | None = None, breaks=(),
               only=None) -> tuple[int, str]:
    """Run the property suite; returns ``(exit_status, report_text)``.

    ``breaks`` names sabotage hooks (``"sandwich"`` perturbs one plateau level).
    """
    brk = set(breaks)
    lines = [f"seed {cfg.seed}", f"n_random {cfg.n_random}"]
    failed = 0
    ids = sorted(PROPERTIES) if only is None else sorted(only)
    for pid in ids:
        try:
            ok, detail = PROPERTIES[pid](cfg, brk)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"error {type(exc).__name__}: {exc}"
        failed += not ok
        lines.append(f"{pid} {'PASS' if ok else 'FAIL'} {detail}")
    lines.append(f"total {len(ids)} failed {failed}")
    text = "\n".join(lines) + "\n"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.txt").write_text(text, encoding="utf-8")
    return (1 if failed else 0), text
