"""Experiment configuration: an INI-style file with fixed sections and keys.

Example (every value shown is the default)::

    [model]
    L = 12
    J = 1.0
    h_x = 1.0
    h_z = 1.0
    t = 1.0
    preparation = exact        # exact | trotter
    trotter_steps = 64

    [estimation]
    mode = exact               # exact | shots
    shots = 1000
    grid_sizes = 1..13         # comma list, ranges as lo..hi; default 1..L+1
    parity_aware = true        # sample one pi period for even-only operators
    seed = 0

    [filter]
    targets = 10, 12           # default: the two largest attainable values
    center = 0

    [cumulants]
    h_values = 0.001, ...      # default: 13 log-spaced steps in [1e-3, 1]
    rounds = 0, 1, 2
    precision_bits = 53        # >53 switches exact mode to multiprecision

    [output]
    path = -                   # - writes to stdout
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from qfcs.model import MfimParams


class ConfigError(ValueError):
    pass


def _default_h_values() -> tuple[float, ...]:
    return tuple(float(h) for h in np.logspace(-3, 0, 13))


@dataclass(frozen=True)
class ExperimentConfig:
    # [model]
    L: int = 12
    J: float = 1.0
    h_x: float = 1.0
    h_z: float = 1.0
    t: float = 1.0
    preparation: str = "exact"
    trotter_steps: int = 64
    # [estimation]
    mode: str = "exact"
    shots: int = 1000
    grid_sizes: tuple[int, ...] | None = None
    parity_aware: bool = True
    seed: int = 0
    # [filter]
    targets: tuple[int, ...] | None = None
    center: int = 0
    # [cumulants]
    h_values: tuple[float, ...] = field(default_factory=_default_h_values)
    rounds: tuple[int, ...] = (0, 1, 2)
    precision_bits: int = 53
    # [output]
    path: str = "-"

    def __post_init__(self):
        try:
            self.model_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.preparation not in ("exact", "trotter"):
            raise ConfigError(f"preparation must be 'exact' or 'trotter', got {self.preparation!r}")
        if self.mode not in ("exact", "shots"):
            raise ConfigError(f"mode must be 'exact' or 'shots', got {self.mode!r}")
        if self.trotter_steps < 1:
            raise ConfigError("trotter_steps must be >= 1")
        if self.mode == "shots" and self.shots < 1:
            raise ConfigError("shots must be >= 1 in shot mode")
        if self.grid_sizes is not None and (not self.grid_sizes or min(self.grid_sizes) < 1):
            raise ConfigError("grid_sizes must be positive integers")
        if not self.h_values or min(self.h_values) <= 0:
            raise ConfigError("h_values must be positive")
        if any(r < 0 for r in self.rounds):
            raise ConfigError("rounds must be non-negative")
        if self.precision_bits < 53:
            raise ConfigError("precision_bits must be >= 53")

    def model_params(self) -> MfimParams:
        return MfimParams(L=self.L, J=self.J, h_x=self.h_x, h_z=self.h_z, t=self.t)

    @property
    def grid_list(self) -> tuple[int, ...]:
        return self.grid_sizes if self.grid_sizes is not None else tuple(range(1, self.L + 2))

    @property
    def extended_bits(self) -> int | None:
        return self.precision_bits if self.precision_bits > 53 else None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self, include_output: bool = True) -> str:
        """Canonical config text; parses back to an equal config."""
        lines = []
        for section, keys in SECTIONS.items():
            if section == "output" and not include_output:
                continue
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_format_value(getattr(self, key))}")
        return "\n".join(lines) + "\n"


SECTIONS = {
    "model": ("L", "J", "h_x", "h_z", "t", "preparation", "trotter_steps"),
    "estimation": ("mode", "shots", "grid_sizes", "parity_aware", "seed"),
    "filter": ("targets", "center"),
    "cumulants": ("h_values", "rounds", "precision_bits"),
    "output": ("path",),
}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            lo, hi = item.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(item))
    return tuple(out)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


_PARSERS = {
    "L": int,
    "J": float,
    "h_x": float,
    "h_z": float,
    "t": float,
    "preparation": str,
    "trotter_steps": int,
    "mode": str,
    "shots": int,
    "grid_sizes": _parse_int_list,
    "parity_aware": _parse_bool,
    "seed": int,
    "targets": _parse_int_list,
    "center": int,
    "h_values": _parse_float_list,
    "rounds": _parse_int_list,
    "precision_bits": int,
    "path": str,
}


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; unknown sections or keys and bad values raise ConfigError."""
    parser = configparser.ConfigParser(
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        delimiters=("=",),
        interpolation=None,
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}syntax error: {exc.message.splitlines()[0]}") from None

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            raw = raw.strip()
            if raw == "" and key in ("grid_sizes", "targets"):
                continue
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: bad value {raw!r} ({exc})") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
