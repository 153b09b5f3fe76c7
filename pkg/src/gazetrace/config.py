"""Typed configuration objects and the ``key=value`` config file format.

Keys are ``section.name``; sections are ``screen``, ``ingest``, ``column``,
``detect``, ``match`` and ``risk``. Lines starting with ``#`` are comments.
Layering is defaults, then file, then command-line flags; later wins.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

CONFIG_ENV_VAR = "GAZETRACE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScreenConfig:
    width: int = 1920
    height: int = 1080
    aoi_tolerance: float = 50.0
    min_aoi_size: float = 80.0
    y_origin: str = "top"

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("screen width and height must be positive")
        if self.aoi_tolerance < 0:
            raise ConfigError("aoi_tolerance must be >= 0")
        if self.min_aoi_size < 1:
            raise ConfigError("min_aoi_size must be >= 1")
        if self.y_origin not in ("top", "bottom"):
            raise ConfigError(f"y_origin must be 'top' or 'bottom', got {self.y_origin!r}")


@dataclass(frozen=True)
class DetectionConfig:
    v_basic: float = 721.0
    v_advanced: float = 300.0
    spatial_threshold: float = 50.0
    min_duration: float = 100.0
    min_cluster_size: int = 3

    def __post_init__(self):
        for name in ("v_basic", "v_advanced", "spatial_threshold", "min_duration", "min_cluster_size"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"detect.{name} must be strictly positive")
        if self.v_advanced > self.v_basic:
            raise ConfigError("detect.v_advanced must not exceed detect.v_basic")


@dataclass(frozen=True)
class MatchConfig:
    min_latency: float = 522.0
    max_latency: float = 5000.0

    def __post_init__(self):
        if not 0 <= self.min_latency < self.max_latency:
            raise ConfigError("need 0 <= match.min_latency < match.max_latency")


@dataclass(frozen=True)
class RiskRules:
    """Thresholds and weights of the additive risk score."""

    relevance_critical: float = 0.30
    relevance_low: float = 0.50
    scatter_max: float = 400.0
    transitions_max: float = 60.0
    hit_rate_min: float = 50.0
    weight_critical_focus: int = 3
    weight_low_focus: int = 2
    weight_scatter: int = 3
    weight_transitions: int = 2
    weight_hit_rate: int = 3
    urgency_high: int = 6
    urgency_moderate: int = 3
    display_cap: int = 10
    focus_tier: float = 40.0
    sustained_tier: float = 60.0
    excellent: float = 0.70
    good: float = 0.50

    def __post_init__(self):
        if self.relevance_critical > self.relevance_low:
            raise ConfigError("risk.relevance_critical must not exceed risk.relevance_low")
        if self.urgency_moderate > self.urgency_high:
            raise ConfigError("risk.urgency_moderate must not exceed risk.urgency_high")
        if self.focus_tier > self.sustained_tier:
            raise ConfigError("risk.focus_tier must not exceed risk.sustained_tier")
        if self.good > self.excellent:
            raise ConfigError("risk.good must not exceed risk.excellent")


@dataclass(frozen=True)
class IngestOptions:
    # auto | normalized | pixel
    coords: str = "auto"
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coords not in ("auto", "normalized", "pixel"):
            raise ConfigError(f"ingest.coords must be auto, normalized or pixel, got {self.coords!r}")


@dataclass(frozen=True)
class AnalysisConfig:
    screen: ScreenConfig = field(default_factory=ScreenConfig)
    ingest: IngestOptions = field(default_factory=IngestOptions)
    detect: DetectionConfig = field(default_factory=DetectionConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    risk: RiskRules = field(default_factory=RiskRules)

    def echo(self) -> dict:
        """Full effective configuration as a plain, ordered dict."""
        out = {}
        for section in ("screen", "ingest", "detect", "match", "risk"):
            obj = getattr(self, section)
            d = {}
            for f in dataclasses.fields(obj):
                v = getattr(obj, f.name)
                d[f.name] = dict(sorted(v.items())) if isinstance(v, dict) else v
            out[section] = d
        return out

    @classmethod
    def from_echo(cls, data: dict) -> "AnalysisConfig":
        return cls(
            screen=ScreenConfig(**data["screen"]),
            ingest=IngestOptions(**data["ingest"]),
            detect=DetectionConfig(**data["detect"]),
            match=MatchConfig(**data["match"]),
            risk=RiskRules(**data["risk"]),
        )


_SECTIONS = {
    "screen": ScreenConfig,
    "detect": DetectionConfig,
    "match": MatchConfig,
    "risk": RiskRules,
    "ingest": IngestOptions,
}

COLUMN_KEYS = ("timestamp_ms", "gaze", "gaze_x", "gaze_y", "event", "level",
               "aoi_name", "aoi_x", "aoi_y", "aoi_w", "aoi_h", "aoi_role")


def _coerce(cls, name: str, raw: str) -> Any:
    ftype = {f.name: f.type for f in dataclasses.fields(cls)}[name]
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: expected {ftype}, got {raw!r}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key=value`` lines into ``{section: {name: value}}`` overrides."""
    overrides: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        section, _, name = key.partition(".")
        if not name:
            raise ConfigError(f"{source}:{lineno}: key {key!r} needs a section prefix")
        if section == "column":
            if name not in COLUMN_KEYS:
                raise ConfigError(f"{source}:{lineno}: unknown column {name!r}")
            overrides.setdefault("ingest", {}).setdefault("columns", {})[name] = value
            continue
        cls = _SECTIONS.get(section)
        if cls is None or name not in {f.name for f in dataclasses.fields(cls)} or name == "columns":
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            overrides.setdefault(section, {})[name] = _coerce(cls, name, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return overrides


def load_config_file(path) -> dict:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def build_config(*layers: dict) -> AnalysisConfig:
    """Merge override layers (left to right, later wins) onto the defaults."""
    base = AnalysisConfig().echo()
    for layer in layers:
        for section, values in (layer or {}).items():
            for name, value in values.items():
                if name == "columns":
                    base[section]["columns"] = {**base[section]["columns"], **value}
                else:
                    base[section][name] = value
    try:
        return AnalysisConfig.from_echo(base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
