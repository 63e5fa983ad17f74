"""INI-style run configuration: parse, validate, and canonical round trip.

Sections: [domain], [discretization], [physics], [kernels], [init], [run].
Unknown sections or keys are rejected with the offending name; every default
is materialized so the canonical text written next to a run reproduces the
exact SimConfig when parsed back.
"""

from __future__ import annotations

import configparser
import io

from .dynamics import ConfigError, SimConfig
from .forces import KernelError, parse_kernel

_SCHEMA = {
    "domain": {"dimension": int},
    "discretization": {"modes": int, "panels": int, "quad_order": int,
                       "stencil": str},
    "physics": {"system": str, "gamma": float, "eps": float,
                "eps_floor": bool, "poisson_coupling": bool},
    "kernels": {"v": str, "w": str, "psi": str},
    "init": {"rho0": str, "u0": str, "floor": float},
    "run": {"t": float, "dt_max": float, "cfl_safety": float, "outputs": int,
            "forcing": str, "seed": int, "label": str,
            "disable_convection": bool, "freeze_density": bool},
}

_FIELD_OF = {
    ("domain", "dimension"): "dim",
    ("discretization", "modes"): "modes",
    ("discretization", "panels"): "panels",
    ("discretization", "quad_order"): "quad_order",
    ("discretization", "stencil"): "stencil",
    ("physics", "system"): "system",
    ("physics", "gamma"): "gamma",
    ("physics", "eps"): "eps",
    ("physics", "eps_floor"): "eps_floor",
    ("physics", "poisson_coupling"): "poisson_coupling",
    ("kernels", "v"): "v",
    ("kernels", "w"): "w",
    ("kernels", "psi"): "psi",
    ("init", "rho0"): "rho0",
    ("init", "u0"): "u0",
    ("init", "floor"): "floor",
    ("run", "t"): "T",
    ("run", "dt_max"): "dt_max",
    ("run", "cfl_safety"): "cfl_safety",
    ("run", "outputs"): "n_outputs",
    ("run", "forcing"): "forcing",
    ("run", "seed"): "seed",
    ("run", "label"): "label",
    ("run", "disable_convection"): "disable_convection",
    ("run", "freeze_density"): "freeze_density",
}

_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _convert(section, key, raw, typ):
    raw = raw.strip()
    try:
        if typ is bool:
            return _BOOL[raw.lower()]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except (KeyError, ValueError):
        raise ConfigError(
            f"[{section}] {key} = {raw!r}: expected {typ.__name__}") from None


def parse_config_text(text: str) -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    kwargs = {}
    for section in cp.sections():
        sect = section.lower()
        if sect not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            k = key.lower()
            if k not in _SCHEMA[sect]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kwargs[_FIELD_OF[(sect, k)]] = _convert(sect, k, raw, _SCHEMA[sect][k])

    cfg = SimConfig(**kwargs)   # validates ranges / enums
    # Validate kernels now so bad presets fail at parse time with the line.
    for role, text_ in (("v", cfg.v), ("w", cfg.w), ("psi", cfg.psi)):
        try:
            parse_kernel(role, text_)
        except KernelError as exc:
            raise ConfigError(f"[kernels] {role} = {text_!r}: {exc}") from exc
    return cfg


def parse_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_to_text(cfg: SimConfig) -> str:
    """Canonical INI text with every default materialized; float fields use
    repr so the round trip is bit exact."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {fmt(getattr(cfg, _FIELD_OF[(section, key)]))}\n")
        out.write("\n")
    return out.getvalue()
