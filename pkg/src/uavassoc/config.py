"""Experiment configuration: every environmental and training parameter in
one dataclass, loadable from TOML or JSON files whose keys mirror the field
names. Units are part of the names (_m, _w, _db, _deg, _per_km2)."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import get_type_hints

from .errors import InvalidConfigurationError
from .neuralnet import TrainConfig
from .radio import AntennaConfig, ChannelParams, db_to_linear

DEFAULT_HEIGHT_GRID_M = tuple(float(g) for g in range(30, 301, 30))
DEFAULT_DENSITY_GRID = (1.0, 2.0, 5.0, 10.0, 20.0)
DEFAULT_BEAMWIDTH_GRID_DEG = (30.0, 45.0, 60.0, 90.0)


@dataclass(frozen=True)
class ExperimentConfig:
    # deployment
    bs_density_per_km2: float = 5.0
    bs_height_m: float = 30.0
    # radio
    n_antenna_elements: int = 8
    beamwidth_deg: float = 45.0
    tx_power_w: float = 40.0
    near_field_db: float = -38.4
    noise_w: float = 8e-13
    sinr_threshold_db: float = 0.0
    alpha_los: float = 2.1
    alpha_nlos: float = 4.0
    fading_m_los: float = 1.0
    fading_m_nlos: float = 1.0
    # buildings
    building_density_per_km2: float = 300.0
    building_coverage_ratio: float = 0.5
    building_height_scale_m: float = 20.0
    # feature structure
    zeta: int = 10
    xi: int = 20
    # UAV placement
    uav_height_m: float = 100.0
    train_height_min_m: float = 30.0
    train_height_max_m: float = 300.0
    # fraction of training scenarios re-weighted into the lowest heights,
    # where the footprint geometry degenerates and labels are hardest
    train_height_emphasis_fraction: float = 0.25
    train_height_emphasis_max_m: float = 55.0
    # Monte Carlo
    n_trials: int = 10000
    master_seed: int = 20260810
    min_window_radius_m: float = 2000.0
    window_expected_bs: float = 100.0
    n_jobs: int = 0   # 0 = use all cores
    # sweeps
    policies: tuple[str, ...] = ("closest", "strongest", "neural")
    height_grid_m: tuple[float, ...] = DEFAULT_HEIGHT_GRID_M
    density_grid_per_km2: tuple[float, ...] = DEFAULT_DENSITY_GRID
    beamwidth_grid_deg: tuple[float, ...] = DEFAULT_BEAMWIDTH_GRID_DEG
    # training
    n_train_samples: int = 50000
    n_test_samples: int = 10000
    learning_rate: float = 1e-5
    epochs: int = 200
    batch_size: int = 128
    hidden_sizes: tuple[int, ...] = (128, 64)
    validation_fraction: float = 0.1
    train_seed: int = 7

    def __post_init__(self):
        if self.n_trials < 1:
            raise InvalidConfigurationError("n_trials must be >= 1")
        if self.zeta < 1 or self.xi < 0:
            raise InvalidConfigurationError("need zeta >= 1 and xi >= 0")
        for grid in (self.height_grid_m, self.density_grid_per_km2, self.beamwidth_grid_deg):
            if len(grid) == 0:
                raise InvalidConfigurationError("sweep grids must be non-empty")
        if not 0.0 < self.building_coverage_ratio < 1.0:
            raise InvalidConfigurationError("building coverage must lie in (0, 1)")

    # ---- derived objects -------------------------------------------------

    def antenna(self) -> AntennaConfig:
        return AntennaConfig(omega=math.radians(self.beamwidth_deg),
                             n_elements=self.n_antenna_elements)

    def channel(self) -> ChannelParams:
        return ChannelParams(tx_power_w=self.tx_power_w, alpha_los=self.alpha_los,
                             alpha_nlos=self.alpha_nlos, fading_m_los=self.fading_m_los,
                             fading_m_nlos=self.fading_m_nlos,
                             near_field=db_to_linear(self.near_field_db),
                             noise_w=self.noise_w,
                             threshold=db_to_linear(self.sinr_threshold_db))

    def window_radius_m(self, density_per_km2: float | None = None) -> float:
        """Disk window large enough for the expected station count, never
        below the configured floor; recomputed per density."""
        density = self.bs_density_per_km2 if density_per_km2 is None else density_per_km2
        radius_km = math.sqrt(self.window_expected_bs / (math.pi * density))
        return max(self.min_window_radius_m, 1000.0 * radius_km)

    def scenario_kwargs(self, uav_height_m=None) -> dict:
        return dict(bs_density_per_km2=self.bs_density_per_km2,
                    window_radius_m=self.window_radius_m(),
                    bs_height_m=self.bs_height_m,
                    building_density_per_km2=self.building_density_per_km2,
                    building_coverage_ratio=self.building_coverage_ratio,
                    building_height_scale_m=self.building_height_scale_m,
                    uav_height_m=uav_height_m,
                    uav_height_range_m=(self.train_height_min_m, self.train_height_max_m),
                    uav_height_emphasis=(self.train_height_emphasis_fraction,
                                         self.train_height_emphasis_max_m))

    def train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                           batch_size=self.batch_size, seed=self.train_seed,
                           validation_fraction=self.validation_fraction,
                           hidden_sizes=self.hidden_sizes)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def _coerce(name: str, value, annotation):
    origin = getattr(annotation, "__origin__", None)
    if origin is tuple:
        if isinstance(value, str):
            value = [v for v in value.split(",") if v != ""]
        elem = annotation.__args__[0]
        try:
            return tuple(elem(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise InvalidConfigurationError(f"bad value for {name}: {exc}") from exc
    try:
        if annotation is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if annotation is float:
            return float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidConfigurationError(f"bad value for {name}: {exc}") from exc
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    hints = get_type_hints(ExperimentConfig)
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - fields
    if unknown:
        raise InvalidConfigurationError(f"unknown config keys: {sorted(unknown)}")
    coerced = {k: _coerce(k, v, hints[k]) for k, v in data.items()}
    return ExperimentConfig(**coerced)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} does not exist")
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfigurationError(f"cannot parse {path}: {exc}") from exc
    elif path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfigurationError(f"cannot parse {path}: {exc}") from exc
    else:
        raise InvalidConfigurationError(
            f"config file must be .toml or .json, got {path.suffix!r}")
    if not isinstance(data, dict):
        raise InvalidConfigurationError(f"{path}: top level must be a table/object")
    return config_from_dict(data)


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply key=value strings (CLI --override) on top of a config."""
    hints = get_type_hints(ExperimentConfig)
    changes = {}
    for item in overrides:
        if "=" not in item:
            raise InvalidConfigurationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        if key not in hints:
            raise InvalidConfigurationError(f"unknown config key {key!r}")
        changes[key] = _coerce(key, raw, hints[key])
    return config.replace(**changes)
