"""Config files, ``--set`` overrides and unit parsing.

A config is a flat ``key = value`` file; ``[section]`` headers may be used
for grouping and are otherwise ignored. Frequencies are ordinary (not
angular) and carry a unit suffix (``hz``, ``khz``, ``mhz``, ``ghz``; bare
numbers are Hz). Lengths take ``nm``, ``um``, ``mm``, ``m``; fields ``t``,
``mt``, ``ut``; inductances ``h``, ``nh``, ``ph``; times ``s``, ``ms``,
``us``, ``ns``. ``none`` clears an optional value.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping

from .errors import ConfigError
from .experiments import NOMINAL_OVERRIDES
from .model import ANGULAR, DerivedScales
from .params import TWO_PI, CouplingCalibration, PhysicalParams

_UNITS = {
    "freq": ({"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}, "hz"),
    "length": ({"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}, "m"),
    "field": ({"t": 1.0, "mt": 1e-3, "ut": 1e-6}, "t"),
    "inductance": ({"h": 1.0, "nh": 1e-9, "ph": 1e-12}, "h"),
    "time": ({"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}, "s"),
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ]*)\s*$")

PARAM_KINDS = {
    "D": "freq", "g_e": "plain", "B_ex": "field", "omega_c": "freq", "L_a": "inductance",
    "d": "length", "R": "length", "K_an": "plain", "M": "plain", "B_0": "field",
    "s_total": "plain?", "omega_d": "freq", "Omega_d": "freq?", "kappa_c": "freq",
    "kappa_m": "freq", "kappa_minus": "freq", "gamma_perp": "freq", "mean_m": "plain?",
}
CALIBRATION_KINDS = {"g_ref": "freq", "R_ref": "length", "p": "plain"}
OVERRIDE_KINDS = {name: ("freq?" if name in ANGULAR else "plain?") for name in DerivedScales.field_names()}
SETTING_DEFAULTS = {
    "out_dir": ("str", "out"),
    "rtol": ("plain", 1e-8),
    "atol": ("plain", 1e-10),
    "lp_dim": ("int", None),
    "hp_dim": ("int", 4),
    "periods": ("plain", None),
    "points_per_period": ("int", 400),
    "ratio": ("plain", 1e3),
    "R_min": ("length", 10e-9),
    "R_max": ("length", 100e-9),
    "R_num": ("int", 91),
    "fig2b_Delta_c": ("freq", TWO_PI * 2e6),
    "fig2b_Delta_s": ("freq", TWO_PI * 1e6),
    "cmp_Delta_c": ("freq", TWO_PI * 2e9),
    "cmp_Delta_s": ("freq", TWO_PI * 20e6),
    "cmp_lambda": ("freq", TWO_PI * 7e3),
    "model": ("str", "jc"),
    "dissipative": ("bool", False),
    "method": ("str", "auto"),
    "t_final": ("time?", None),
    "initial": ("str", ""),
}
ALL_KINDS = {
    **PARAM_KINDS,
    **CALIBRATION_KINDS,
    **OVERRIDE_KINDS,
    **{k: kind for k, (kind, _) in SETTING_DEFAULTS.items()},
}


def parse_value(key: str, text: str):
    """Parse ``text`` for config key ``key`` into SI (angular for frequencies)."""
    if key not in ALL_KINDS:
        raise ConfigError(f"unknown config key {key!r}")
    kind = ALL_KINDS[key]
    optional = kind.endswith("?")
    kind = kind.rstrip("?")
    raw = str(text).strip().strip('"').strip("'")
    if raw.lower() == "none":
        if optional:
            return None
        raise ConfigError(f"{key} cannot be none")
    if kind == "str":
        return raw
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    m = _NUM.match(raw)
    if not m:
        raise ConfigError(f"{key}: cannot parse {raw!r}")
    value, unit = float(m.group(1)), m.group(2).lower().replace("µ", "u")
    if kind in ("plain", "int"):
        if unit:
            raise ConfigError(f"{key} is dimensionless; drop the unit {unit!r}")
        if kind == "int":
            if value != int(value):
                raise ConfigError(f"{key} must be an integer")
            return int(value)
        return value
    table, default_unit = _UNITS[kind]
    unit = unit or default_unit
    if unit not in table:
        raise ConfigError(f"{key}: unit {unit!r} not in {sorted(table)}")
    value *= table[unit]
    return value * TWO_PI if kind == "freq" else value


@dataclass
class Config:
    params: PhysicalParams
    overrides: dict[str, float]
    settings: dict
    raw: dict[str, str] = field(default_factory=dict)
    defaulted: list[str] = field(default_factory=list)

    def provenance(self) -> dict:
        return {
            "config": dict(sorted(self.raw.items())),
            "params": self.params.to_dict(),
            "overrides": dict(sorted(self.overrides.items())),
            "settings": dict(sorted(self.settings.items())),
        }


def read_config_file(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__", strict=True)
    cp.optionxform = str
    with open(path) as fh:
        text = fh.read()
    try:
        cp.read_string("[__top__]\n" + text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out: dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key in out:
                raise ConfigError(f"{path}: key {key!r} given twice")
            out[key] = value.split(" #")[0].strip()
    return out


def parse_set(items: Iterable[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_config(raw: Mapping[str, str]) -> Config:
    """Validate raw strings and assemble params, overrides and settings."""
    parsed = {k: parse_value(k, v) for k, v in raw.items()}
    param_kw = {k: v for k, v in parsed.items() if k in PARAM_KINDS}
    cal_kw = {k: v for k, v in parsed.items() if k in CALIBRATION_KINDS}
    defaulted = sorted(set(PARAM_KINDS) - set(param_kw))
    try:
        params = PhysicalParams(coupling=CouplingCalibration(**cal_kw), **param_kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    overrides = dict(NOMINAL_OVERRIDES)
    for k, v in parsed.items():
        if k in OVERRIDE_KINDS:
            if v is None:
                overrides.pop(k, None)
            else:
                overrides[k] = v
    settings = {k: default for k, (_, default) in SETTING_DEFAULTS.items()}
    settings.update({k: v for k, v in parsed.items() if k in SETTING_DEFAULTS})
    return Config(params, overrides, settings, dict(raw), defaulted)


def load_config(path: str | None = None, sets: Iterable[str] = ()) -> Config:
    raw = read_config_file(path) if path else {}
    raw.update(parse_set(sets))
    return build_config(raw)


def physical_field_names() -> list[str]:
    return [f.name for f in fields(PhysicalParams) if f.name != "coupling"]
