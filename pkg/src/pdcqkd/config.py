"""Flat ``key = value`` run configuration with schema validation.

Format: UTF-8 text, one ``key = value`` per line, ``#`` starts a comment,
lists are comma separated.  A list may use an ellipsis to denote an
arithmetic progression: ``distances = 0,10,...,200``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import MinimizerPolicy, ProtocolConstants
from .channel import ChannelParams
from .errors import ValidationError
from .optimize import PROTOCOLS, SweepSpec
from .source import SourceParams

__all__ = ["RunConfig", "SCHEMA", "parse_config_text", "load_config", "parse_value"]


def _float(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ValueError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _int(text):
    value = _float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _bool(text):
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*options):
    def parse(text):
        value = str(text).strip()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {value!r}")
        return value

    return parse


def _mu(text):
    if str(text).strip() == "optimize":
        return "optimize"
    return _float(text)


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [_float(v) for v in text]
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if "..." not in parts:
        return [_float(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2 or parts.count("...") != 1:
        raise ValueError("ellipsis lists need the form a,b,...,c")
    head = [_float(p) for p in parts[:i]]
    stop = _float(parts[-1])
    step = head[-1] - head[-2]
    if step <= 0:
        raise ValueError("ellipsis lists must be increasing")
    count = int(math.floor((stop - head[-1]) / step + 1e-9))
    values = head + [head[-1] + step * (k + 1) for k in range(count)]
    # snap accumulated rounding so the stated end point is reproduced exactly
    return [round(v, 12) for v in values]


def _opt_str(text):
    if text is None:
        return None
    text = str(text).strip()
    return text or None


REQUIRED = object()

# key -> (parser, default); REQUIRED entries are demanded only by the commands that use them
SCHEMA = {
    "protocol": (_choice(*PROTOCOLS), "efficient_pdc"),
    "mu": (_mu, "optimize"),
    "eta_A": (_float, REQUIRED),
    "d_A": (_float, REQUIRED),
    "alpha": (_float, REQUIRED),
    "eta_B": (_float, REQUIRED),
    "p_d": (_float, REQUIRED),
    "e_d": (_float, REQUIRED),
    "length_km": (_float, REQUIRED),
    "distances": (_float_list, REQUIRED),
    "q": (_float, 0.5),
    "f_ec": (_float, 1.22),
    "mu_lo": (_float, 1e-4),
    "mu_hi": (_float, 2.0),
    "mu_grid": (_int, 129),
    "mu_rel_tol": (_float, 1e-4),
    "x_grid": (_int, 4097),
    "x_rel_tol": (_float, 1e-12),
    "format": (_choice("csv", "json"), "csv"),
    "precision": (_int, 6),
    "out": (_opt_str, None),
    "seed": (_int, 1),
    "pulses": (_int, 1_000_000),
    "batch_size": (_int, 1 << 18),
    "workers": (_int, 1),
    "z_threshold": (_float, 5.0),
    "attack.block_fraction": (_float, 1.0),
    "attack.match_q_t": (_bool, True),
    "cutoff_lo": (_float, 0.0),
    "cutoff_hi": (_float, 300.0),
    "resolution": (_float, 0.1),
    "find_switch": (_bool, False),
    "backend": (_choice("auto", "compiled", "python"), "auto"),
}


def parse_value(key: str, raw, where: str = "") -> object:
    if key not in SCHEMA:
        raise ValidationError(f"{where}unknown key {key!r}")
    try:
        return SCHEMA[key][0](raw)
    except ValueError as exc:
        raise ValidationError(f"{where}invalid value for {key!r}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into a dict of validated values (no defaults applied)."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in line:
            raise ValidationError(f"{where}expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ValidationError(f"{where}duplicate key {key!r}")
        values[key] = parse_value(key, raw, where)
    return values


def load_config(path) -> dict:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration: explicit values merged over schema defaults."""

    values: dict = field(default_factory=dict)

    @classmethod
    def build(cls, file_values: dict | None = None, overrides: dict | None = None) -> "RunConfig":
        merged = {}
        for key, (parser, default) in SCHEMA.items():
            if default is not REQUIRED:
                merged[key] = default
        merged.update(file_values or {})
        for key, raw in (overrides or {}).items():
            merged[key] = parse_value(key, raw, "command line: ")
        cfg = cls(merged)
        cfg._check_ranges()
        return cfg

    def __getitem__(self, key):
        if key not in self.values:
            raise ValidationError(f"missing required key {key!r}")
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, *keys):
        missing = [k for k in keys if k not in self.values]
        if missing:
            raise ValidationError(f"missing required key(s): {', '.join(missing)}")

    def _check_ranges(self):
        v = self.values
        if not 1 <= v["precision"] <= 17:
            raise ValidationError("precision must lie in [1, 17]")
        if v["pulses"] < 1:
            raise ValidationError("pulses must be >= 1")
        if v["z_threshold"] <= 0:
            raise ValidationError("z_threshold must be > 0")
        if v["resolution"] <= 0:
            raise ValidationError("resolution must be > 0")

    def to_dict(self) -> dict:
        return dict(sorted(self.values.items()))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        values = {k: parse_value(k, v, "report config: ") for k, v in data.items()}
        return cls(dict(sorted(values.items())))

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    # --- builders for the numerical layer ---

    def needs_source(self) -> bool:
        return self.values["protocol"] != "ideal_single_photon"

    def channel(self, length_km: float | None = None) -> ChannelParams:
        self.require("alpha", "eta_B", "p_d", "e_d")
        length = self.values.get("length_km", 0.0) if length_km is None else length_km
        return ChannelParams(self["alpha"], length, self["eta_B"], self["p_d"], self["e_d"])

    def source(self, mu: float | None = None) -> SourceParams:
        self.require("eta_A", "d_A")
        if mu is None:
            mu = self["mu"]
            if mu == "optimize":
                mu = 0.1  # placeholder; callers optimizing mu replace it
        return SourceParams(mu, self["eta_A"], self["d_A"])

    def constants(self) -> ProtocolConstants:
        return ProtocolConstants(self["q"], self["f_ec"])

    def sweep_spec(self, distances=None) -> SweepSpec:
        if distances is None:
            self.require("distances")
            distances = self["distances"]
        if self.needs_source():
            source = self.source()
        else:
            source = SourceParams(0.1, 0.5, 0.0)
        return SweepSpec(
            distances_km=tuple(distances),
            protocol=self["protocol"],
            source=source,
            channel=self.channel(0.0),
            constants=self.constants(),
            optimize_mu=self["mu"] == "optimize",
            mu_lo=self["mu_lo"],
            mu_hi=self["mu_hi"],
            mu_grid=self["mu_grid"],
            mu_rel_tol=self["mu_rel_tol"],
            minimizer=MinimizerPolicy(self["x_grid"], self["x_rel_tol"]),
            workers=self["workers"],
        )
