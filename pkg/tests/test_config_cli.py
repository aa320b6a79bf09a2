import subprocess
import sys
import textwrap

import numpy as np
import pytest

from hjhalf.cli import main
from hjhalf.config import RunConfig, load_function, make_u0, parse_config, parse_config_string
from hjhalf.errors import ParseError, UnknownPreset
from hjhalf.harness import PROPERTIES, fmt
from hjhalf.presets import PRESETS, preset
from hjhalf.pwl import read_csv, write_csv

FAST = textwrap.dedent("""\
    [verify]
    n_random = 10
    samples = 64
    [testfn]
    nx = 401
    dt = 0.01
    """)


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.ini"
    p.write_text(FAST)
    return p


# config -----------------------------------------------------------------

def test_defaults():
    cfg = parse_config_string("")
    assert cfg == RunConfig(base_dir=cfg.base_dir)
    assert cfg.H.same_as(preset("W")) and cfg.F.same_as(preset("linear"))


def test_parse_values_and_fractions():
    cfg = parse_config_string(textwrap.dedent("""\
        [grid]
        dx = 1/64
        cfl_factor = 0.5
        [converge]
        dxs = 1/10, 1/20
        [solve]
        far_slope = -2
        right_boundary = one_sided
        """))
    assert cfg.dx == 1 / 64 and cfg.cfl_factor == 0.5
    assert cfg.dxs == (0.1, 0.05)
    assert cfg.far_slope == -2.0 and cfg.right_boundary == "one_sided"


def test_inline_comments():
    cfg = parse_config_string("[grid]\ndx = 1/64   ; fine grid\n[problem]\nflux = asymF # preset\n")
    assert cfg.dx == 1 / 64 and cfg.flux == "asymF"


def test_negative_dx_reported_with_line():
    with pytest.raises(ParseError) as exc:
        parse_config_string("[grid]\ndx = -1\n")
    assert exc.value.errors == ["grid.dx must be positive (line 2)"]


def test_all_errors_collected():
    text = "[grid]\ndx = 0\nL = abc\nbogus = 1\n[problem]\nhamiltonian = nope\n[extra]\n"
    with pytest.raises(ParseError) as exc:
        parse_config_string(text)
    errs = "\n".join(exc.value.errors)
    assert "grid.dx must be positive" in errs
    assert "grid.L: cannot parse 'abc'" in errs
    assert "grid.bogus: unknown key" in errs
    assert "unknown section [extra]" in errs
    assert "available: " + ", ".join(sorted(PRESETS)) in errs


def test_unknown_preset_lists_presets():
    with pytest.raises(UnknownPreset) as exc:
        preset("Q")
    for name in PRESETS:
        assert name in str(exc.value)


def test_csv_function_relative_to_config(tmp_path):
    write_csv(preset("asymF"), tmp_path / "flux.csv")
    (tmp_path / "run.ini").write_text("[problem]\nflux = flux.csv\n")
    cfg = parse_config(tmp_path / "run.ini")
    assert cfg.F.same_as(preset("asymF"))
    assert load_function(str(tmp_path / "flux.csv")).same_as(preset("asymF"))


def test_make_u0_specs():
    x = np.linspace(0, 3, 7)
    np.testing.assert_array_equal(make_u0("zero")(x), 0 * x)
    np.testing.assert_array_equal(make_u0("plane:-2")(x), -2 * x)
    np.testing.assert_array_equal(make_u0("const:0.1")(x), 0.1 + 0 * x)
    np.testing.assert_array_equal(make_u0("truncated:-2")(x), np.minimum(0, -2 * (x - 1)))
    with pytest.raises(ValueError):
        make_u0("wave")


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333333"
    assert fmt(float("inf")) == "inf" and fmt(-float("inf")) == "-inf"


# CLI --------------------------------------------------------------------

def test_limiter_subcommand(tmp_path):
    out = tmp_path / "lim"
    assert main(["limiter", "--hamiltonian", "W", "--flux", "linear", "--out", str(out)]) == 0
    assert (out / "limiter.csv").read_text().splitlines() == [
        "p_alpha,p_minus,p_plus,level", "-0.5,-1.5,0.5,0.5", "1,1,inf,0"]
    F = read_csv(out / "effective_flux.csv")
    assert F.xs.tolist() == [-1.5, 0.5, 1.0] and F.ys.tolist() == [0.5, 0.5, 0.0]
    assert (F.left_slope, F.right_slope) == (-1.0, 0.0)
    assert "sandwich PASS" in (out / "report.txt").read_text()


def test_limiter_outputs_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["limiter", "--hamiltonian", "doublewell", "--flux", "staircaseF",
              "--out", str(tmp_path / d)])
    for name in ("limiter.csv", "effective_flux.csv", "report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_testfn_subcommand(tmp_path, fast_cfg):
    out = tmp_path / "tf"
    assert main(["testfn", "--config", str(fast_cfg), "--flux", "asymF", "--out", str(out)]) == 0
    rows = (out / "E.csv").read_text().splitlines()
    assert rows[0] == "t,E" and len(rows) > 1000
    assert (out / "g.csv").read_text().splitlines()[0] == "x,g"
    assert "differential_inequality PASS" in (out / "phi_check.txt").read_text()


def test_testfn_inadmissible_flux(tmp_path, capsys):
    assert main(["testfn", "--flux", "staircaseF", "--out", str(tmp_path)]) == 1
    assert "NotStrictlyDecreasing" in capsys.readouterr().err


def test_solve_and_converge(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[problem]\nu0 = plane:-2\n[grid]\ndx = 1/64\n[solve]\n"
                   "boundary = effective\nsnapshots = 3\n[converge]\ndxs = 1/20, 1/40, 1/80\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    meta = dict(line.split(" ", 1) for line in (tmp_path / "s" / "meta.txt").read_text().splitlines())
    assert meta["dx"] == "0.015625" and meta["sigma"] == "1"
    rows = np.loadtxt(tmp_path / "s" / "solution.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 2], -2 * rows[:, 1] - rows[:, 0], atol=1e-12)

    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    rates = np.loadtxt(tmp_path / "c" / "rates.csv", delimiter=",", skiprows=1)
    assert rates.shape == (3, 3) and np.all(np.diff(rates[:, 1]) < 0)


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\ndx = -1\n")
    assert main(["solve", "--config", str(bad)]) == 2
    assert "grid.dx must be positive (line 2)" in capsys.readouterr().err
    assert main(["limiter", "--hamiltonian", "Q"]) == 2


def test_verify_pass_and_deterministic(tmp_path, fast_cfg):
    outs = []
    for d in ("a", "b"):
        code = main(["verify", "--config", str(fast_cfg), "--seed", "7",
                     "--out", str(tmp_path / d)])
        assert code == 0
        outs.append((tmp_path / d / "verify.txt").read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    ids = [line.split()[0] for line in text.splitlines() if line.split()[1:2] in (["PASS"], ["FAIL"])]
    assert ids == sorted(PROPERTIES)


def test_verify_break_sandwich(tmp_path, fast_cfg, capsys):
    code = main(["verify", "--config", str(fast_cfg), "--break", "sandwich",
                 "--out", str(tmp_path)])
    assert code == 1
    fails = [l for l in capsys.readouterr().out.splitlines() if " FAIL" in l]
    assert len(fails) == 1 and fails[0].startswith("limiter.sandwich")


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "hjhalf.cli", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "limiter" in out.stdout
