"""INI-style run configuration.

Example::

    [problem]
    hamiltonian = W
    flux = linear
    u0 = zero

    [grid]
    dx = 0.025
    L = 4

Function specs are preset names or paths to PL CSV files (relative paths are
resolved against the config file's directory).  Every problem found is
collected and reported at once through :class:`~hjhalf.errors.ParseError`.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ParseError, UnknownPreset
from .presets import PRESETS, preset
from .pwl import PLFunction, read_csv

__all__ = ["RunConfig", "parse_config", "parse_config_string", "load_function", "make_u0"]

MODES = ("limiter", "testfn", "solve", "converge", "verify")


@dataclass
class RunConfig:
    hamiltonian: str = "W"
    flux: str = "linear"
    u0: str = "zero"
    # grid
    dx: float = 0.025
    L: float = 4.0
    T_final: float = 1.0
    cfl_factor: float = 0.4
    # run
    mode: str = "verify"
    out_dir: str = "out"
    seed: int = 0
    # solve
    right_boundary: str = "far_slope"
    far_slope: float | None = None
    boundary: str = "flux"
    snapshots: int = 11
    # converge
    dxs: tuple = (1 / 40, 1 / 80, 1 / 160, 1 / 320)
    # testfn
    dt: float = 1e-3
    T_max: float = 100.0
    R: float = 50.0
    nx: int = 1001
    margin: float = 0.05
    # verify
    n_random: int = 100
    samples: int = 512
    base_dir: Path = field(default_factory=Path.cwd)

    def function(self, which: str) -> PLFunction:
        return load_function(getattr(self, which), self.base_dir)

    @property
    def H(self) -> PLFunction:
        return self.function("hamiltonian")

    @property
    def F(self) -> PLFunction:
        return self.function("flux")


def load_function(spec: str, base_dir: Path | str = ".") -> PLFunction:
    """Preset name or PL CSV path."""
    if spec in PRESETS:
        return preset(spec)
    path = Path(spec)
    if not path.is_absolute():
        path = Path(base_dir) / path
    if path.suffix.lower() == ".csv" or path.exists():
        return read_csv(path)
    return preset(spec)  # raises UnknownPreset with the list


_U0 = {
    "zero": lambda: (lambda x: np.zeros_like(x)),
    "neg_abs_sin": lambda: (lambda x: -np.abs(np.sin(x))),
}


def make_u0(spec: str) -> Callable[[np.ndarray], np.ndarray]:
    """Initial data from a spec string.

    ``zero``, ``neg_abs_sin``, ``const:c``, ``plane:p`` (``p x``) and
    ``truncated:p`` (``min(0, p (x - 1))``).
    """
    name, _, arg = spec.partition(":")
    if name in _U0 and not arg:
        return _U0[name]()
    try:
        val = float(arg)
    except ValueError:
        raise ValueError(f"bad initial data spec {spec!r}") from None
    if name == "const":
        return lambda x: np.full_like(np.asarray(x, dtype=float), val)
    if name == "plane":
        return lambda x: val * np.asarray(x, dtype=float)
    if name == "truncated":
        return lambda x: np.minimum(0.0, val * (np.asarray(x, dtype=float) - 1.0))
    raise ValueError(f"bad initial data spec {spec!r}")


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


_SCHEMA = {
    "problem": {"hamiltonian": "str", "flux": "str", "u0": "u0"},
    "grid": {"dx": "pos", "L": "pos", "T_final": "pos", "cfl_factor": "pos"},
    "run": {"mode": "mode", "out_dir": "str", "seed": "int"},
    "solve": {"right_boundary": "rb", "far_slope": "float", "boundary": "bnd",
              "snapshots": "posint"},
    "converge": {"dxs": "poslist"},
    "testfn": {"dt": "pos", "T_max": "pos", "R": "pos", "nx": "posint", "margin": "pos"},
    "verify": {"n_random": "posint", "samples": "posint"},
}


def _line_index(text: str) -> dict:
    idx, sect = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            sect = m.group(1).strip()
            idx[(sect, None)] = no
            continue
        if sect and "=" in line and not line.startswith(("#", ";")):
            idx[(sect, line.split("=", 1)[0].strip().lower())] = no
    return idx


def parse_config_string(text: str, base_dir: Path | str = ".") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    errors: list[str] = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError([f"syntax: {exc}"]) from None
    lines = _line_index(text)
    cfg = RunConfig(base_dir=Path(base_dir))
    lower = {s: {k.lower(): k for k in keys} for s, keys in _SCHEMA.items()}

    def where(sect, key):
        no = lines.get((sect, key.lower()))
        return f" (line {no})" if no else ""

    for sect in cp.sections():
        if sect not in _SCHEMA:
            errors.append(f"unknown section [{sect}]{where(sect, '')}; "
                          f"expected one of {', '.join(_SCHEMA)}")
            continue
        for key, raw in cp.items(sect):
            canon = lower[sect].get(key.lower())
            if canon is None:
                errors.append(f"{sect}.{key}: unknown key{where(sect, key)}")
                continue
            kind = _SCHEMA[sect][canon]
            name = f"{sect}.{canon}"
            val = raw.strip()
            try:
                if kind == "str":
                    if not val:
                        raise ValueError(f"{name} must not be empty")
                    out = val
                elif kind == "u0":
                    make_u0(val)
                    out = val
                elif kind == "pos":
                    out = _number(val)
                    if not (out > 0 and math.isfinite(out)):
                        raise ValueError(f"{name} must be positive")
                elif kind == "float":
                    out = _number(val)
                elif kind == "int":
                    out = int(val)
                elif kind == "posint":
                    out = int(val)
                    if out <= 0:
                        raise ValueError(f"{name} must be a positive integer")
                elif kind == "poslist":
                    out = tuple(_number(v) for v in val.split(",") if v.strip())
                    if not out or any(not v > 0 for v in out):
                        raise ValueError(f"{name} must be a list of positive numbers")
                elif kind == "mode":
                    if val not in MODES:
                        raise ValueError(f"{name} must be one of {', '.join(MODES)}")
                    out = val
                elif kind == "rb":
                    if val not in ("far_slope", "one_sided"):
                        raise ValueError(f"{name} must be far_slope or one_sided")
                    out = val
                elif kind == "bnd":
                    if val not in ("flux", "effective"):
                        raise ValueError(f"{name} must be flux or effective")
                    out = val
                else:  # pragma: no cover
                    raise AssertionError(kind)
            except ValueError as exc:
                msg = str(exc)
                if not msg.startswith(name):
                    msg = f"{name}: cannot parse {val!r}"
                errors.append(msg + where(sect, canon))
                continue
            setattr(cfg, canon, out)

    if cfg.cfl_factor > 1:
        errors.append(f"grid.cfl_factor must not exceed 1{where('grid', 'cfl_factor')}")
    for which, sect in (("hamiltonian", "problem"), ("flux", "problem")):
        try:
            cfg.function(which)
        except UnknownPreset as exc:
            errors.append(f"{sect}.{which}: {exc}{where(sect, which)}")
        except (OSError, ValueError) as exc:
            errors.append(f"{sect}.{which}: {exc}{where(sect, which)}")
    if errors:
        raise ParseError(errors)
    return cfg


def parse_config(path) -> RunConfig:
    """Read and validate a config file; all problems are reported together.

    Raises
    ------
    ParseError
        With one message per problem, e.g. ``grid.dx must be positive``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError([f"cannot read {path}: {exc}"]) from None
    return parse_config_string(text, path.parent)
