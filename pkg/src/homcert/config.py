"""Run configuration: JSON schema, validation and CLI overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .fock import DEFAULT_N_MAX, DEFAULT_QUADRATURE_POINTS, MIN_QUADRATURE_POINTS
from .keyrate import VARIANTS, ChannelModel, IntensityGrid
from .leakage import VISIBILITY_KEYS


@dataclass(frozen=True)
class HomSettings:
    mu_hom: float = 0.5
    n_max: int = DEFAULT_N_MAX
    quadrature_points: int = DEFAULT_QUADRATURE_POINTS

    def __post_init__(self):
        if not (self.mu_hom > 0 and math.isfinite(self.mu_hom)):
            raise ValueError(f"hom.mu_hom must be positive, got {self.mu_hom!r}")
        if not isinstance(self.n_max, int) or self.n_max < 2:
            raise ValueError(f"hom.n_max must be an integer >= 2, got {self.n_max!r}")
        if not isinstance(self.quadrature_points, int) or self.quadrature_points < MIN_QUADRATURE_POINTS:
            raise ValueError(
                f"hom.quadrature_points must be an integer >= {MIN_QUADRATURE_POINTS}, "
                f"got {self.quadrature_points!r}"
            )


@dataclass(frozen=True)
class ScanSettings:
    d_min_km: float = 0.0
    d_max_km: float = 200.0
    step_km: float = 5.0

    def __post_init__(self):
        if self.d_min_km < 0:
            raise ValueError(f"scan.d_min_km must be non-negative, got {self.d_min_km}")
        if self.d_max_km < self.d_min_km:
            raise ValueError("scan.d_max_km must be >= scan.d_min_km")
        if not self.step_km > 0:
            raise ValueError(f"scan.step_km must be positive, got {self.step_km}")

    def distances(self) -> list[float]:
        count = int(math.floor((self.d_max_km - self.d_min_km) / self.step_km + 1e-9)) + 1
        return [round(self.d_min_km + i * self.step_km, 10) for i in range(count)]


def _check_vis_input(value, name: str):
    if value is None:
        return None
    if isinstance(value, dict):
        if set(value) != set(VISIBILITY_KEYS):
            raise ValueError(f"{name} map needs exactly the keys {', '.join(VISIBILITY_KEYS)}")
        return {k: float(value[k]) for k in VISIBILITY_KEYS}
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number or a six-entry map, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelModel = field(default_factory=ChannelModel)
    hom: HomSettings = field(default_factory=HomSettings)
    grid: IntensityGrid = field(default_factory=IntensityGrid)
    scan: ScanSettings = field(default_factory=ScanSettings)
    error_correction_variant: str = "paper"
    worst_case_visibility: bool = False
    # measured inputs; a number or a map keyed by pulse pair
    visibility: float | dict[str, float] | None = None
    sigma: float | dict[str, float] | None = None

    def __post_init__(self):
        if self.error_correction_variant not in VARIANTS:
            raise ValueError(
                f"error_correction_variant must be one of {VARIANTS}, got {self.error_correction_variant!r}"
            )
        if not isinstance(self.worst_case_visibility, bool):
            raise ValueError("worst_case_visibility must be a boolean")
        object.__setattr__(self, "visibility", _check_vis_input(self.visibility, "visibility"))
        object.__setattr__(self, "sigma", _check_vis_input(self.sigma, "sigma"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        nested = {"channel": ChannelModel, "hom": HomSettings, "grid": IntensityGrid, "scan": ScanSettings}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key in nested:
                if not isinstance(value, dict):
                    raise ValueError(f"config section {key!r} must be an object")
                sub = nested[key]
                sub_known = {f.name for f in fields(sub) if f.init}
                bad = set(value) - sub_known
                if bad:
                    raise ValueError(f"unknown keys in {key!r}: {sorted(bad)}")
                try:
                    kwargs[key] = sub(**value)
                except TypeError as exc:
                    raise ValueError(f"invalid {key!r} section: {exc}") from exc
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
        except OSError as exc:
            raise ValueError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(
        self,
        *,
        mu_hom=None,
        n_max=None,
        d_min=None,
        d_max=None,
        step=None,
        variant=None,
        worst_case=None,
        visibility=None,
        sigma=None,
    ) -> "RunConfig":
        """Copy with command-line values taking precedence over the file."""
        hom_kw = {k: v for k, v in (("mu_hom", mu_hom), ("n_max", n_max)) if v is not None}
        scan_kw = {
            k: v for k, v in (("d_min_km", d_min), ("d_max_km", d_max), ("step_km", step)) if v is not None
        }
        top = {}
        if variant is not None:
            top["error_correction_variant"] = variant
        if worst_case:
            top["worst_case_visibility"] = True
        if visibility is not None:
            top["visibility"] = visibility
        if sigma is not None:
            top["sigma"] = sigma
        return replace(self, hom=replace(self.hom, **hom_kw), scan=replace(self.scan, **scan_kw), **top)
