"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment, booleans are ``true``/``false``,
lists are comma separated and ``delta_a`` accepts the literal ``auto``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .ioncavity import AUTO, IonCavityParams

PRESET_PACKAGE = "engineered_reservoir.presets"


@dataclass(frozen=True)
class RunConfig:
    name: str = "run"
    g: float = 100.0
    omega_c: float = 2000.0
    phi_c: float = 0.0
    delta_c: float = 0.0
    delta_a: float | str = AUTO
    kappa: float = 100.0
    gamma: float = 1.0
    nbar_a: float = 0.0
    nbar_s: float | None = None
    fock_dim: int = 15
    model: str = "full"
    initial_atom: str = "g"
    t_max: float = 1.0
    dt_out: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    fock_check: bool = True
    scan_axis: str | None = None
    scan_values: tuple[float, ...] = ()
    series_axis: str | None = None
    series_values: tuple[float, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if self.nbar_s is None:
            object.__setattr__(self, "nbar_s", self.nbar_a)
        if self.model not in ("full", "effective"):
            raise ConfigError(f"model must be 'full' or 'effective', got {self.model!r}", key="model")
        if self.initial_atom not in ("g", "e", "plus"):
            raise ConfigError(f"initial_atom must be g, e or plus, got {self.initial_atom!r}", key="initial_atom")
        for axis_key in ("scan_axis", "series_axis"):
            axis = getattr(self, axis_key)
            if axis is not None and axis not in ("nbar", "g", "delta_c"):
                raise ConfigError(f"axis must be nbar, g or delta_c, got {axis!r}", key=axis_key)
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ConfigError(f"t_max must be positive, got {self.t_max}", key="t_max")
        if self.dt_out is not None and not self.dt_out > 0:
            raise ConfigError(f"dt_out must be positive, got {self.dt_out}", key="dt_out")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def params(self) -> IonCavityParams:
        return IonCavityParams(
            g=self.g,
            omega_c=self.omega_c,
            phi_c=self.phi_c,
            delta_c=self.delta_c,
            delta_a=self.delta_a,
            kappa=self.kappa,
            gamma=self.gamma,
            nbar_a=self.nbar_a,
            nbar_s=self.nbar_s,
            fock_dim=self.fock_dim,
        )

    def to_mapping(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError("unknown key", key=key)
            try:
                kwargs[key] = _coerce(key, value)
            except ValueError as exc:
                raise ConfigError(str(exc), key=key) from None
        return cls(**kwargs)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FLOATS = {"g", "omega_c", "phi_c", "delta_c", "kappa", "gamma", "nbar_a", "t_max", "rtol", "atol"}
_OPT_FLOATS = {"nbar_s", "dt_out"}
_INTS = {"fock_dim", "workers"}
_LISTS = {"scan_values", "series_values"}
_OPT_STR = {"scan_axis", "series_axis"}


def _to_float(value) -> float:
    if isinstance(value, bool):
        raise ValueError("boolean where a number was expected")
    return float(value)


def _coerce(key: str, value):
    try:
        return _coerce_value(key, value)
    except TypeError as exc:
        raise ValueError(str(exc)) from None


def _coerce_value(key: str, value):
    if key in _FLOATS:
        return _to_float(value)
    if key in _OPT_FLOATS:
        return None if value in (None, "none", "") else _to_float(value)
    if key in _INTS:
        f = _to_float(value)
        if f != int(f):
            raise ValueError(f"{value!r} is not an integer")
        return int(f)
    if key == "delta_a":
        return AUTO if value == AUTO else _to_float(value)
    if key == "fock_check":
        if isinstance(value, bool):
            return value
        if value in ("true", "false"):
            return value == "true"
        raise ValueError(f"expected true or false, got {value!r}")
    if key in _LISTS:
        if isinstance(value, str):
            items = [x.strip() for x in value.split(",") if x.strip()]
        else:
            items = list(value)
        return tuple(_to_float(x) for x in items)
    if key in _OPT_STR:
        return None if value in (None, "none", "") else str(value)
    return str(value)


def parse_config_text(text: str, name: str | None = None) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    seen: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in known:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in seen:
            raise ConfigError("duplicate key", line=lineno, key=key)
        try:
            seen[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, key=key) from None
    if name is not None and "name" not in seen:
        seen["name"] = name
    return RunConfig(**seen)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text, name=path.stem)


def preset_names() -> list[str]:
    root = resources.files(PRESET_PACKAGE)
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> RunConfig:
    res = resources.files(PRESET_PACKAGE).joinpath(f"{name}.cfg")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config_text(res.read_text(), name=name)
