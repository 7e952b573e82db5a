"""Run configuration: sectioned ``key = value unit`` text.

Example::

    [cavity]
    d0 = 20 um
    b0 = 1 um
    L = 100 um

Physical values must carry a unit; they are converted to SI at parse time.
Angular frequencies (``omega_*``) accept ``rad/s`` or a cyclic unit (Hz, MHz,
...), in which case the value is read as omega/2pi. Unknown sections or keys
are errors.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import UnitError, canonical_unit, si_unit, unit_convert, unit_dimension


class ConfigError(ValueError):
    """Invalid configuration; message starts with the offending field path."""


@dataclass(frozen=True)
class Field:
    kind: str  # a unit dimension, or int / float / str / complex / choice / grid / angle
    required: bool = False
    default: Any = None
    choices: tuple = ()


SCHEMA: dict[str, dict[str, Field]] = {
    "cavity": {
        "d0": Field("length", True),
        "b0": Field("length", True),
        "L": Field("length", True),
        "C_i": Field("capacitance", True),
        "C_m": Field("capacitance", True),
        "C_J": Field("capacitance", True),
        "C_g": Field("capacitance", True),
        "d_i": Field("length", True),
        "r0": Field("length"),
        "convention": Field("choice", default="doubled", choices=("doubled", "lc")),
        "V_g": Field("voltage", default=0.0),
        "V_i": Field("voltage", default=0.0),
        "C_ib": Field("capacitance", default=0.0),
        "V_ib": Field("voltage", default=0.0),
    },
    "trap": {
        "species": Field("str", True),
        "mass": Field("mass"),
        "omega_nu": Field("angular_frequency", True),
    },
    "gate": {
        "delta_k": Field("wavenumber", True),
        "n_l1": Field("int", True),
        "t1": Field("time", True),
        "t2": Field("time", True),
        "target_alpha": Field("angle", default=math.pi / 4),
        "hbar_kappa": Field("force"),
        "z_l": Field("int", default=1),
    },
    "motional": {
        "kind": Field("choice", True, choices=("coherent", "thermal", "fock")),
        "amp0": Field("complex", default=0j),
        "nbar": Field("float", default=0.0),
        "samples": Field("int", default=1000),
        "seed": Field("int", default=0),
        "n": Field("int", default=0),
        "fock_N": Field("int", default=128),
        "fock_max_N": Field("int", default=512),
    },
    "noise": {
        "T": Field("temperature", True),
        "R_n": Field("resistance", default=1e4),
        "excited_fraction": Field("float"),
        "P_abs": Field("power"),
        "duration": Field("time"),
        "volume": Field("volume"),
        "n0": Field("density"),
        "Delta": Field("energy"),
        "lambda_pen": Field("length"),
        "tau_n": Field("time"),
        "x_r": Field("length"),
        "omega_min": Field("angular_frequency", default=2 * math.pi * 1e6),
        "omega_max": Field("angular_frequency", default=2 * math.pi * 1e13),
        "omega_points": Field("int", default=61),
    },
    "sweep": {
        "command": Field("choice", True, choices=("design", "plan", "simulate", "noise")),
        "parameter": Field("str", True),
        "grid": Field("grid", True),
    },
}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VALUE_RE = re.compile(rf"^\s*({_NUM})\s*(.*?)\s*$")
_PI_RE = re.compile(rf"^\s*({_NUM})?\s*\*?\s*pi\s*(?:/\s*({_NUM}))?\s*(rad)?\s*$")
_SPACE_RE = re.compile(rf"^\s*(logspace|linspace)\(\s*({_NUM})\s*,\s*({_NUM})\s*,\s*(\d+)\s*\)\s*(.*?)\s*$")


def parse_quantity(text: str, dimension: str, path: str) -> float:
    m = _VALUE_RE.match(text)
    if not m:
        raise ConfigError(f"{path}: cannot parse {text!r} as a number with unit")
    mag, unit = float(m.group(1)), m.group(2)
    if not unit:
        raise ConfigError(f"{path}: missing unit on {text!r}")
    try:
        cu = canonical_unit(unit)
        udim = unit_dimension(cu)
    except UnitError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if dimension == "angular_frequency" and udim == "frequency":
        return 2 * math.pi * unit_convert(mag, cu, "Hz")
    if udim != dimension:
        raise ConfigError(f"{path}: unit {unit!r} is {udim}, expected {dimension}")
    return unit_convert(mag, cu, si_unit(dimension))


def parse_angle(text: str, path: str) -> float:
    m = _PI_RE.match(text)
    if m:
        lead = float(m.group(1)) if m.group(1) else 1.0
        div = float(m.group(2)) if m.group(2) else 1.0
        return lead * math.pi / div
    m = _VALUE_RE.match(text)
    if m and m.group(2) in ("rad", ""):
        return float(m.group(1))
    raise ConfigError(f"{path}: cannot parse angle {text!r}")


def parse_grid(text: str, path: str) -> tuple[list[float], str]:
    """Return grid magnitudes (in the given unit) and the unit string."""
    m = _SPACE_RE.match(text)
    if m:
        fn, a, b, n, unit = m.groups()
        n = int(n)
        vals = (np.logspace if fn == "logspace" else np.linspace)(float(a), float(b), n)
        return [float(v) for v in vals], unit
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{path}: empty grid")
    unit = ""
    m_last = _VALUE_RE.match(parts[-1])
    if m_last:
        unit = m_last.group(2)
    vals = []
    for i, p in enumerate(parts):
        mm = _VALUE_RE.match(p)
        if not mm or (mm.group(2) and i != len(parts) - 1):
            raise ConfigError(f"{path}: grid entry {p!r} is not numeric")
        vals.append(float(mm.group(1)))
    return vals, unit


def _format_quantity(value: float, kind: str) -> str:
    if kind == "angle":
        return f"{value!r} rad"
    return f"{value!r} {si_unit(kind)}"


def parse_field(section: str, key: str, raw: str) -> Any:
    fld = SCHEMA[section][key]
    path = f"{section}.{key}"
    raw = raw.strip()
    if fld.kind == "str":
        if not raw:
            raise ConfigError(f"{path}: empty value")
        return raw
    if fld.kind == "choice":
        if raw not in fld.choices:
            raise ConfigError(f"{path}: {raw!r} not one of {', '.join(fld.choices)}")
        return raw
    if fld.kind == "int":
        try:
            f = float(raw)
        except ValueError:
            raise ConfigError(f"{path}: {raw!r} is not an integer") from None
        if f != int(f):
            raise ConfigError(f"{path}: {raw!r} is not an integer")
        return int(f)
    if fld.kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{path}: {raw!r} is not a number") from None
    if fld.kind == "complex":
        try:
            return complex(raw.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"{path}: {raw!r} is not a complex number") from None
    if fld.kind == "angle":
        return parse_angle(raw, path)
    if fld.kind == "grid":
        return raw
    return parse_quantity(raw, fld.kind, path)


def format_field(section: str, key: str, value: Any) -> str:
    kind = SCHEMA[section][key].kind
    if kind in ("str", "choice", "grid"):
        return str(value)
    if kind == "int":
        return str(int(value))
    if kind == "float":
        return repr(float(value))
    if kind == "complex":
        return repr(complex(value))
    return _format_quantity(float(value), kind)


@dataclass
class RunConfig:
    """Parsed configuration; ``sections[name][key]`` holds SI values.

    Only keys present in the source are stored; defaults come from :meth:`get`.
    """

    sections: dict[str, dict[str, Any]] = field(default_factory=dict)

    def has(self, section: str) -> bool:
        return section in self.sections

    def get(self, section: str, key: str) -> Any:
        fld = SCHEMA[section][key]
        sec = self.sections.get(section, {})
        if key in sec:
            return sec[key]
        if fld.required:
            raise ConfigError(f"{section}.{key}: required field missing")
        return fld.default

    def require(self, section: str) -> dict[str, Any]:
        if section not in self.sections:
            raise ConfigError(f"{section}: section missing")
        return self.sections[section]

    def with_value(self, path: str, value: Any) -> "RunConfig":
        section, key = split_path(path)
        secs = {k: dict(v) for k, v in self.sections.items()}
        secs.setdefault(section, {})[key] = value
        return RunConfig(secs)

    def echo(self) -> dict[str, dict[str, str]]:
        return {
            sec: {k: format_field(sec, k, v) for k, v in sorted(vals.items())}
            for sec, vals in self.sections.items()
        }


def split_path(path: str) -> tuple[str, str]:
    try:
        section, key = path.split(".")
    except ValueError:
        raise ConfigError(f"sweep.parameter: {path!r} is not a section.key path") from None
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"sweep.parameter: unknown field {path!r}")
    return section, key


def from_mapping(data: dict[str, dict[str, str]]) -> RunConfig:
    secs: dict[str, dict[str, Any]] = {}
    for section, vals in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"{section}: unknown section")
        out = {}
        for key, raw in vals.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            out[key] = parse_field(section, key, str(raw))
        for key, fld in SCHEMA[section].items():
            if fld.required and key not in out:
                raise ConfigError(f"{section}.{key}: required field missing")
        secs[section] = out
    return RunConfig(secs)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from None
    return from_mapping({s: dict(cp.items(s)) for s in cp.sections()})


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for section, vals in cfg.echo().items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in vals.items())
        lines.append("")
    return "\n".join(lines)


def sweep_values(cfg: RunConfig) -> tuple[str, list[Any]]:
    path = cfg.get("sweep", "parameter")
    section, key = split_path(path)
    kind = SCHEMA[section][key].kind
    if kind in ("str", "choice", "grid", "complex"):
        raise ConfigError(f"sweep.parameter: {path} is not a numeric field")
    mags, unit = parse_grid(cfg.get("sweep", "grid"), "sweep.grid")
    if not mags:
        raise ConfigError("sweep.grid: empty grid")
    if kind == "int":
        if any(v != int(v) for v in mags):
            raise ConfigError(f"sweep.grid: {path} needs integer values")
        return path, [int(v) for v in mags]
    if kind == "float":
        return path, mags
    if kind == "angle":
        return path, mags
    if not unit:
        raise ConfigError(f"sweep.grid: missing unit for {path}")
    return path, [parse_quantity(f"{v!r} {unit}", kind, "sweep.grid") for v in mags]
