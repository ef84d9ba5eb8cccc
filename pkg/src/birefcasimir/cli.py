"""Command-line front end for single points and (a, theta) sweeps.

A run is described by an INI-style file with ``[scenario]``, ``[quadrature]``
and ``[output]`` sections. Every key can also be given on the command line
as ``--section.key=value``; flags win over the file.

Example::

    [scenario]
    plate1.eps_perp = 3.0
    plate1.eps_par = 1 + lorentz(2.0e32, 1.5e16, 0)
    plate2.eps_perp = file(bafo.txt)
    gap.eps = 1.0
    a = linspace(50nm, 500nm, 4)
    theta = 0deg, 30deg, 60deg

    [quadrature]
    rel_tol = 1e-6

    [output]
    format = csv
    dimensionless = false

Material values are a number, a sum of ``lorentz(strength, resonance,
damping)`` and ``drude(strength, damping)`` terms (optionally with a leading
``1 +``, which the oscillator form always includes), or
``file(path[, column])`` with the path relative to the config file.
``plate1.eps`` sets both components of an isotropic plate. Plate 2 keys
default to plate 1's. Lengths take ``m``, ``mm``, ``um`` or ``nm``
suffixes, angles ``rad`` or ``deg``; unsuffixed values are SI.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .materials import (
    Constant,
    MaterialError,
    Oscillator,
    OscillatorSum,
    Scenario,
    UniaxialPlate,
    load_tabulated,
)
from .quadrature import HBAR_C, PointResult, QuadratureSpec, sweep

__all__ = ["ConfigError", "RunConfig", "parse_config", "build_scenarios", "format_csv",
           "format_json", "run", "main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NOT_CONVERGED"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2

SECTIONS = ("scenario", "quadrature", "output")

SCENARIO_KEYS = {
    "plate1.eps", "plate1.eps_perp", "plate1.eps_par",
    "plate2.eps", "plate2.eps_perp", "plate2.eps_par",
    "gap.eps", "gap.mu", "a", "theta",
}
OUTPUT_KEYS = {"format", "path", "dimensionless", "timing", "quantities"}
QUADRATURE_KEYS = {f.name for f in dataclasses.fields(QuadratureSpec)}

SI_COLUMNS = ("a_m", "theta_rad", "F_Pa", "F_err_Pa", "E_J_per_m2", "E_err",
              "Q_J_per_m2_rad", "Q_err", "converged", "nodes", "seconds")
HAT_COLUMNS = ("a_m", "theta_rad", "F_hat", "F_err_hat", "E_hat", "E_err_hat",
               "Q_hat", "Q_err_hat", "converged", "nodes", "seconds")

_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
_ANGLE_UNITS = {"rad": 1.0, "deg": math.pi / 180}


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and the reason."""

    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Parsed run: scenario grid, quadrature settings and output options."""

    plate1: UniaxialPlate
    plate2: UniaxialPlate
    gap_eps: object
    gap_mu: object
    a_grid: tuple[float, ...]
    theta_grid: tuple[float, ...]
    spec: QuadratureSpec
    format: str = "csv"
    path: str | None = None
    dimensionless: bool = False
    timing: bool = True
    quantities: tuple[str, ...] = ("F", "E", "Q")
    echo: dict = dataclasses.field(default_factory=dict)


# ---------------------------------------------------------------- values


def _number(text: str, units: dict[str, float], key: str, default_unit: str) -> float:
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([a-zµ]*)\s*", text)
    if not m:
        raise ConfigError(key, f"cannot parse number {text!r}")
    unit = m.group(2) or default_unit
    if unit not in units:
        raise ConfigError(key, f"unknown unit {unit!r} (use one of {', '.join(units)})")
    try:
        value = float(m.group(1))
    except ValueError:
        raise ConfigError(key, f"cannot parse number {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, "value must be finite")
    return value * units[unit]


def parse_grid(text: str, key: str, units: dict[str, float], default_unit: str) -> tuple[float, ...]:
    """``x``, ``x1, x2, ...`` or ``linspace(lo, hi, n)``; must be strictly increasing."""
    text = text.strip()
    m = re.fullmatch(r"linspace\((.*)\)", text)
    if m:
        parts = [p.strip() for p in m.group(1).split(",")]
        if len(parts) != 3:
            raise ConfigError(key, "linspace needs (lo, hi, n)")
        lo = _number(parts[0], units, key, default_unit)
        hi = _number(parts[1], units, key, default_unit)
        try:
            n = int(parts[2])
        except ValueError:
            raise ConfigError(key, f"linspace count {parts[2]!r} is not an integer") from None
        if n < 1:
            raise ConfigError(key, "linspace count must be >= 1")
        values = tuple(float(x) for x in np.linspace(lo, hi, n))
    else:
        values = tuple(_number(p, units, key, default_unit) for p in text.split(",") if p.strip())
    if not values:
        raise ConfigError(key, "grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(key, "grid must be strictly increasing")
    return values


def parse_length_grid(text: str, key: str = "scenario.a") -> tuple[float, ...]:
    values = parse_grid(text, key, _LENGTH_UNITS, "m")
    if any(v <= 0 for v in values):
        raise ConfigError(key, "separations must be > 0")
    return values


def parse_angle_grid(text: str, key: str = "scenario.theta") -> tuple[float, ...]:
    return parse_grid(text, key, _ANGLE_UNITS, "rad")


def parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _split_args(body: str) -> list[str]:
    return [p.strip() for p in body.split(",")]


def parse_material(text: str, key: str, base: Path, kind: str = "permittivity"):
    """Material model from its config string (see module docstring)."""
    text = text.strip()
    try:
        m = re.fullmatch(r"file\((.*)\)", text)
        if m:
            args = _split_args(m.group(1))
            if not args[0] or len(args) > 2:
                raise ConfigError(key, "file() takes (path[, column])")
            path = Path(args[0])
            if not path.is_absolute():
                path = base / path
            column = int(args[1]) if len(args) == 2 else 1
            return load_tabulated(path, value_column=column, kind=kind)
        if "(" in text:
            if kind != "permittivity":
                raise ConfigError(key, "oscillator models are only allowed for permittivities")
            return OscillatorSum(tuple(_oscillators(text, key)))
        return Constant(_number(text, {"": 1.0}, key, ""), kind=kind)
    except MaterialError as exc:
        raise ConfigError(key, str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, str(exc)) from None


def _oscillators(text: str, key: str):
    # split on '+' except inside exponents such as 2e+32
    for term in (t.strip() for t in re.split(r"(?<![eE])\+", text)):
        if not term:
            continue
        m = re.fullmatch(r"(lorentz|drude)\((.*)\)", term)
        if not m:
            try:
                float(term)
            except ValueError:
                raise ConfigError(key, f"cannot parse oscillator term {term!r}") from None
            if float(term) != 1.0:
                raise ConfigError(key, "constant offsets other than 1 are not supported in a sum")
            continue
        args = [float(x) for x in _split_args(m.group(2))]
        if m.group(1) == "lorentz":
            if len(args) not in (2, 3):
                raise ConfigError(key, "lorentz takes (strength, resonance[, damping])")
            yield Oscillator(*args)
        else:
            if len(args) != 2:
                raise ConfigError(key, "drude takes (strength, damping)")
            yield Oscillator(args[0], 0.0, args[1])


# ---------------------------------------------------------------- config


def _raw_config(path: str | None, overrides: dict[str, str]) -> tuple[dict[str, dict[str, str]], Path]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            with open(p) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {p} ({exc.strerror})") from None
        except configparser.Error as exc:
            raise ConfigError("config", str(exc).splitlines()[0]) from None
        base = p.parent
    raw = {s: {} for s in SECTIONS}
    for section in parser.sections():
        if section not in raw:
            raise ConfigError(section, "unknown section")
        raw[section].update(parser[section])
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in raw or not key:
            raise ConfigError(dotted, "flags must look like --section.key=value")
        raw[section][key] = value
    allowed = {"scenario": SCENARIO_KEYS, "quadrature": QUADRATURE_KEYS, "output": OUTPUT_KEYS}
    for section, keys in raw.items():
        for key in keys:
            if key not in allowed[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    return raw, base


def _quadrature_spec(raw: dict[str, str]) -> QuadratureSpec:
    kwargs = {}
    types = {f.name: f.type for f in dataclasses.fields(QuadratureSpec)}
    for key, text in raw.items():
        name = f"quadrature.{key}"
        typ = str(types[key])
        try:
            if "int" in typ:
                kwargs[key] = int(text)
            elif "float" in typ:
                kwargs[key] = None if text.strip().lower() == "none" else float(text)
            else:
                kwargs[key] = text.strip()
        except ValueError:
            raise ConfigError(name, f"cannot parse {text!r}") from None
    try:
        return QuadratureSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError("quadrature", str(exc)) from None


def _plate(raw: dict[str, str], prefix: str, base: Path, fallback: dict[str, str] | None):
    def text(name):
        for k in (f"{prefix}.{name}", f"{prefix}.eps"):
            if k in raw:
                return k, raw[k]
        if fallback is not None:
            return fallback[name]
        raise ConfigError(f"scenario.{prefix}.{name}", "missing")

    found = {name: text(name) for name in ("eps_perp", "eps_par")}
    models = {name: parse_material(v, f"scenario.{k}", base) for name, (k, v) in found.items()}
    return UniaxialPlate(models["eps_perp"], models["eps_par"]), found


def parse_config(path: str | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read the config file (optional) and apply ``section.key`` overrides."""
    raw, base = _raw_config(path, overrides or {})
    sc = raw["scenario"]
    plate1, found1 = _plate(sc, "plate1", base, None)
    plate2, _ = _plate(sc, "plate2", base, found1)
    gap_eps = parse_material(sc.get("gap.eps", "1"), "scenario.gap.eps", base)
    gap_mu = parse_material(sc.get("gap.mu", "1"), "scenario.gap.mu", base, kind="permeability")
    if "a" not in sc:
        raise ConfigError("scenario.a", "missing")
    a_grid = parse_length_grid(sc["a"])
    theta_grid = parse_angle_grid(sc.get("theta", "0"))
    spec = _quadrature_spec(raw["quadrature"])

    out = raw["output"]
    fmt = out.get("format", "csv").strip().lower()
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", f"must be csv or json, got {fmt!r}")
    quantities = tuple(q.strip() for q in out.get("quantities", "F,E,Q").split(",") if q.strip())
    if not quantities or any(q not in ("F", "E", "Q") for q in quantities):
        raise ConfigError("output.quantities", "must be a comma list drawn from F, E, Q")
    path_out = out.get("path", "-").strip()
    return RunConfig(
        plate1=plate1, plate2=plate2, gap_eps=gap_eps, gap_mu=gap_mu,
        a_grid=a_grid, theta_grid=theta_grid, spec=spec, format=fmt,
        path=None if path_out in ("", "-") else path_out,
        dimensionless=parse_bool(out.get("dimensionless", "false"), "output.dimensionless"),
        timing=parse_bool(out.get("timing", "true"), "output.timing"),
        quantities=quantities,
        echo={s: dict(v) for s, v in raw.items()},
    )


def build_scenarios(cfg: RunConfig) -> list[Scenario]:
    """One scenario per (a, theta), a-major order."""
    try:
        return [
            Scenario(cfg.plate1, cfg.plate2, a, theta, cfg.gap_eps, cfg.gap_mu)
            for a in cfg.a_grid for theta in cfg.theta_grid
        ]
    except MaterialError as exc:
        raise ConfigError("scenario", str(exc)) from None


# ---------------------------------------------------------------- output


def _row(r: PointResult, dimensionless: bool, timing: bool) -> dict:
    s3 = r.a**3 / HBAR_C if dimensionless else 1.0
    s4 = r.a**4 / HBAR_C if dimensionless else 1.0
    cols = HAT_COLUMNS if dimensionless else SI_COLUMNS
    values = (r.a, r.theta, r.F * s4, r.F_err * s4, r.E * s3, r.E_err * s3,
              r.Q * s3, r.Q_err * s3)
    row = {c: float(v) for c, v in zip(cols[:8], values)}
    row["converged"] = bool(r.converged)
    row["nodes"] = int(r.nodes)
    row["seconds"] = float(r.seconds) if timing else None
    if r.error:
        row["error"] = r.error
    return row


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return format(v, ".17g")


def format_csv(results, dimensionless: bool = False, timing: bool = True) -> str:
    cols = HAT_COLUMNS if dimensionless else SI_COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in results:
        row = _row(r, dimensionless, timing)
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def format_json(results, cfg: RunConfig) -> str:
    records = [_row(r, cfg.dimensionless, cfg.timing) for r in results]
    doc = {"version": __version__, "config": cfg.echo, "records": records}
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def _summary(results, stream) -> None:
    for r in results:
        flag = "ok" if r.converged else ("FAILED " + r.error if r.error else "not converged")
        stream.write(
            f"a={r.a:.4g} m theta={r.theta:.4g} rad  F={r.F:.6g} Pa  E={r.E:.6g} J/m2  "
            f"Q={r.Q:.6g} J/m2/rad  [{flag}, {r.seconds:.1f}s]\n"
        )


# ---------------------------------------------------------------- entry


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Evaluate the configured grid and write results; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    scenarios = build_scenarios(cfg)
    log.info("evaluating %d point(s)", len(scenarios))
    results = sweep(scenarios, cfg.spec, cfg.quantities)
    for r in results:
        if r.error:
            # the CSV row only says converged=false; keep the reason visible
            log.warning("point a=%.6g m theta=%.6g rad failed: %s", r.a, r.theta, r.error)
    text = format_csv(results, cfg.dimensionless, cfg.timing) if cfg.format == "csv" \
        else format_json(results, cfg)
    if cfg.path is None:
        stdout.write(text)
    else:
        Path(cfg.path).write_text(text)
        _summary(results, stderr)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="birefcasimir",
        description="Casimir pressure, energy and torque between uniaxial plates.",
        epilog="Any config key can be set as --section.key=value (flags win over the file).",
    )
    parser.add_argument("config", nargs="?", help="INI config file")
    parser.add_argument("--dimensionless", action="store_true",
                        help="report F a^4/hbar c, E a^3/hbar c, Q a^3/hbar c")
    parser.add_argument("-v", "--verbose", action="store_true")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    for item in rest:
        m = re.fullmatch(r"--([A-Za-z_]+\.[A-Za-z0-9_.]+)=(.*)", item)
        if not m:
            parser.error(f"unrecognized argument {item!r}")
        overrides[m.group(1)] = m.group(2)
    if args.dimensionless:
        overrides["output.dimensionless"] = "true"
    return args, overrides


def main(argv=None) -> int:
    args, overrides = _parse_args(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, overrides)
        return run(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
