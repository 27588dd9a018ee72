"""Run configuration shared by all pipeline stages."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .econometrics.specs import PRESETS
from .kcore import CoreMode
from .panel import PanelConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    alliances: str | None = None
    firms: str | None = None
    patents: str | None = None
    suffix_file: str | None = None
    alias_file: str | None = None
    year_start: int | None = None
    year_end: int | None = None
    window_width: int = 3
    stride: int = 1
    presample: int = 5
    alpha: float = 1.0
    beta: float = 1.0
    core_network: str = "window"
    weighted_paths: bool = False
    normalized_efficiency: bool = False
    models: tuple[str, ...] = tuple(PRESETS)
    cluster: str = "CORE"
    out_dir: str = "out"
    panel: str | None = None
    seed: int = 0
    max_error_fraction: float = 0.01
    centrality_years: str = "all"      # "all" or "final"
    synth: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.window_width < 1:
            raise ConfigError("window_width must be >= 1")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.presample < 0:
            raise ConfigError("presample must be >= 0")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ConfigError("alpha, beta must be >= 0 with alpha + beta > 0")
        if self.core_network not in ("window", "cumulative"):
            raise ConfigError("core_network must be 'window' or 'cumulative'")
        if self.centrality_years not in ("all", "final"):
            raise ConfigError("centrality_years must be 'all' or 'final'")
        if self.year_start is not None and self.year_end is not None and self.year_start > self.year_end:
            raise ConfigError("year_start is after year_end")
        unknown = [m for m in self.models if m not in PRESETS]
        if unknown:
            raise ConfigError(f"unknown model presets {unknown}; choose from {sorted(PRESETS)}")
        if not 0 <= self.max_error_fraction <= 1:
            raise ConfigError("max_error_fraction must be in [0, 1]")
        return self

    @property
    def year_range(self):
        if self.year_start is None and self.year_end is None:
            return None
        return (self.year_start if self.year_start is not None else -10**9,
                self.year_end if self.year_end is not None else 10**9)

    @property
    def core_mode(self) -> CoreMode:
        return CoreMode(weighted=True, alpha=self.alpha, beta=self.beta)

    def panel_config(self) -> PanelConfig:
        return PanelConfig(
            window_width=self.window_width, stride=self.stride, presample=self.presample,
            first_window=self.year_start, last_window=self.year_end,
            core_mode=self.core_mode, core_network=self.core_network,
            weighted_paths=self.weighted_paths, normalized_efficiency=self.normalized_efficiency,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        return d

    def dump(self, out_dir) -> None:
        path = Path(out_dir) / "run_config.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls().merged(data)

    def merged(self, overrides: dict) -> "RunConfig":
        names = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "models" in clean:
            clean["models"] = tuple(clean["models"])
        return replace(self, **clean)
