"""Urban scenario synthesis and line-of-sight ray tracing.

Base stations form a Poisson point process on a disk window around the
UAV. Buildings sit centered in the cells of a square grid with a seeded
random anchor offset; each building's height is Rayleigh-distributed and
hashed lazily from its cell index, so only cells touched by a ray are ever
evaluated (a window holds tens of thousands of cells, almost all unused).

Blockage is decided analytically per crossed footprint: a building blocks
the link iff its height reaches the link height at the crossing endpoint
nearer the lower terminal. No step size is involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidConfigurationError
from .geometry import GroundPoint
from .hashing import cell_uniform

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BaseStation:
    position: GroundPoint
    height: float


@dataclass(frozen=True)
class BuildingField:
    """Square-grid building layout with hashed per-cell Rayleigh heights.

    Cell (i, j) spans [anchor + i*pitch, anchor + (i+1)*pitch) on each
    axis and holds one centered building of side ``building_side``.
    """

    grid_pitch: float
    building_side: float
    height_scale: float
    height_seed: int
    anchor_x: float = 0.0
    anchor_y: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.building_side <= self.grid_pitch:
            raise InvalidConfigurationError(
                f"building side {self.building_side} must lie in (0, pitch={self.grid_pitch}]")


def building_field_from_params(density_per_km2: float, coverage_ratio: float,
                               height_scale_m: float, seed: int,
                               anchor_xy: tuple[float, float] = (0.0, 0.0)) -> BuildingField:
    """Derive grid pitch and building side from density and land coverage.

    density buildings per km^2 on a square grid gives pitch 1000/sqrt(d);
    covering a fraction ``coverage_ratio`` of the land needs side
    1000*sqrt(coverage/d).
    """
    if density_per_km2 <= 0.0:
        raise InvalidConfigurationError(f"building density must be positive, got {density_per_km2}")
    if not 0.0 < coverage_ratio < 1.0:
        raise InvalidConfigurationError(
            f"building land coverage must lie in (0, 1), got {coverage_ratio}")
    pitch = 1000.0 / math.sqrt(density_per_km2)
    side = 1000.0 * math.sqrt(coverage_ratio / density_per_km2)
    return BuildingField(grid_pitch=pitch, building_side=side,
                         height_scale=height_scale_m, height_seed=seed,
                         anchor_x=anchor_xy[0], anchor_y=anchor_xy[1])


def building_heights(field: BuildingField, ix, iy) -> np.ndarray:
    """Heights of the buildings in cells (ix, iy); deterministic in
    (cell, seed) with a Rayleigh(scale) marginal via inverse-CDF."""
    u = cell_uniform(field.height_seed, ix, iy)
    return field.height_scale * np.sqrt(-2.0 * np.log1p(-u))


def building_height_at(field: BuildingField, cell: tuple[int, int]) -> float:
    return float(building_heights(field, cell[0], cell[1]))


@dataclass
class Scenario:
    """One realized world. Immutable after construction; queries are pure."""

    bs_xy: np.ndarray  # (n, 2) meters
    bs_height: float
    buildings: BuildingField
    uav_xy: GroundPoint
    uav_height: float
    window_radius: float
    seed: int

    def __post_init__(self):
        self.bs_xy = np.asarray(self.bs_xy, dtype=float).reshape(-1, 2)
        if self.uav_height <= 0.0:
            raise InvalidConfigurationError(f"UAV height must be positive, got {self.uav_height}")

    @property
    def n_bs(self) -> int:
        return self.bs_xy.shape[0]

    @cached_property
    def bss(self) -> tuple[BaseStation, ...]:
        return tuple(BaseStation(GroundPoint(float(x), float(y)), self.bs_height)
                     for x, y in self.bs_xy)

    def bs_index(self, bs) -> int:
        """Resolve a BaseStation (by exact coordinates) or integer index."""
        if isinstance(bs, (int, np.integer)):
            idx = int(bs)
            if not 0 <= idx < self.n_bs:
                raise IndexError(f"base station index {idx} out of range")
            return idx
        hits = np.flatnonzero((self.bs_xy[:, 0] == bs.position.x)
                              & (self.bs_xy[:, 1] == bs.position.y))
        if hits.size == 0:
            raise ValueError("base station is not part of this scenario")
        return int(hits[0])


def ppp_points(intensity_per_km2: float, window_radius_m: float, rng) -> np.ndarray:
    """Poisson point process on a disk around the origin: Poisson count with
    mean intensity*area, positions i.i.d. uniform on the disk."""
    if intensity_per_km2 <= 0.0:
        raise InvalidConfigurationError(f"intensity must be positive, got {intensity_per_km2}")
    mean = intensity_per_km2 * math.pi * (window_radius_m / 1000.0) ** 2
    n = int(rng.poisson(mean))
    if n == 0:
        return np.empty((0, 2))
    radius = window_radius_m * np.sqrt(rng.random(n))
    angle = TWO_PI * rng.random(n)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def generate_ppp(intensity_per_km2: float, window_radius_m: float, rng,
                 bs_height_m: float = 30.0) -> list[BaseStation]:
    pts = ppp_points(intensity_per_km2, window_radius_m, rng)
    return [BaseStation(GroundPoint(float(x), float(y)), bs_height_m) for x, y in pts]


def sample_uav_height(u: float, height_range: tuple[float, float],
                      emphasis_fraction: float = 0.0,
                      emphasis_max_m: float = 0.0) -> float:
    """Map one uniform variate to a UAV height.

    Plain uniform over the range by default. With an emphasis fraction w,
    the density becomes a mixture that re-weights the low band
    [lo, emphasis_max] (where link geometry degenerates and extra training
    data pays off) while keeping the rest uniform; implemented as the exact
    piecewise-linear inverse CDF so one draw covers both cases.
    """
    lo, hi = height_range
    if emphasis_fraction <= 0.0 or emphasis_max_m <= lo:
        return lo + u * (hi - lo)
    m = min(emphasis_max_m, hi)
    w = emphasis_fraction
    d1 = w / (m - lo) + (1.0 - w) / (hi - lo)
    q = (m - lo) * d1
    if u <= q:
        return lo + u / d1
    return m + (u - q) * (hi - lo) / (1.0 - w)


def make_scenario(seed: int, *, bs_density_per_km2: float, window_radius_m: float,
                  bs_height_m: float, building_density_per_km2: float,
                  building_coverage_ratio: float, building_height_scale_m: float,
                  uav_height_m: float | None = None,
                  uav_height_range_m: tuple[float, float] = (30.0, 300.0),
                  uav_height_emphasis: tuple[float, float] = (0.0, 0.0)) -> Scenario:
    """Generate one scenario from a 64-bit seed. The draw order is fixed
    (BS count, BS positions, grid anchor, height seed, UAV height), so the
    same seed always rebuilds the identical world."""
    rng = np.random.default_rng(seed)
    pts = ppp_points(bs_density_per_km2, window_radius_m, rng)
    pitch = 1000.0 / math.sqrt(building_density_per_km2)
    anchor = rng.random(2) * pitch
    height_seed = int(rng.integers(0, 2**63, dtype=np.int64))
    if uav_height_m is None:
        uav_height_m = sample_uav_height(float(rng.random()), uav_height_range_m,
                                         uav_height_emphasis[0], uav_height_emphasis[1])
    field = building_field_from_params(building_density_per_km2, building_coverage_ratio,
                                       building_height_scale_m, height_seed,
                                       anchor_xy=(float(anchor[0]), float(anchor[1])))
    return Scenario(bs_xy=pts, bs_height=bs_height_m, buildings=field,
                    uav_xy=GroundPoint(0.0, 0.0), uav_height=uav_height_m,
                    window_radius=window_radius_m, seed=seed)


def _axis_crossings(a: float, b: np.ndarray, d: np.ndarray, pitch: float) -> np.ndarray:
    """Segment parameters t in [0, 1] at which each link crosses a grid
    line on one axis, padded with 1.0 to a rectangular array."""
    lo = np.minimum(a, b) / pitch
    hi = np.maximum(a, b) / pitch
    first = np.ceil(lo)
    count = np.floor(hi) - first + 1.0
    count = np.where(d == 0.0, 0.0, np.maximum(count, 0.0)).astype(np.int64)
    width = int(count.max()) if count.size else 0
    if width == 0:
        return np.empty((b.shape[0], 0))
    k = first[:, None] + np.arange(width)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (k * pitch - a) / d[:, None]
    return np.where(np.arange(width)[None, :] < count[:, None], t, 1.0)


def _band_window(a: float, d: np.ndarray, cells: np.ndarray, pitch: float,
                 gap: float, side: float) -> tuple[np.ndarray, np.ndarray]:
    """Per (link, cell) parameter window during which the link coordinate
    lies inside the cell's centered building band on one axis."""
    lo = cells * pitch + gap
    hi = lo + side
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - a) / d[:, None]
        t2 = (hi - a) / d[:, None]
    t_in = np.minimum(t1, t2)
    t_out = np.maximum(t1, t2)
    stationary = (d == 0.0)[:, None]
    inside = (a >= lo) & (a <= hi)
    t_in = np.where(stationary, np.where(inside, -np.inf, np.inf), t_in)
    t_out = np.where(stationary, np.where(inside, np.inf, -np.inf), t_out)
    return t_in, t_out


def _clear_mask(field: BuildingField, ax: float, ay: float, a_height: float,
                bx: np.ndarray, by: np.ndarray, b_height: float) -> np.ndarray:
    """True per link iff no building reaches the link line.

    Links run from (ax, ay, a_height) to each (bx, by, b_height). Works in
    the grid anchor frame; every grid-line crossing splits the segment into
    single-cell stretches, and each stretch is slab-tested against its
    cell's building square.
    """
    pitch = field.grid_pitch
    gap = 0.5 * (pitch - field.building_side)
    ax = ax - field.anchor_x
    ay = ay - field.anchor_y
    bx = np.asarray(bx, dtype=float) - field.anchor_x
    by = np.asarray(by, dtype=float) - field.anchor_y
    n = bx.shape[0]
    if n == 0:
        return np.ones(0, dtype=bool)
    dx = bx - ax
    dy = by - ay

    tx = _axis_crossings(ax, bx, dx, pitch)
    ty = _axis_crossings(ay, by, dy, pitch)
    t = np.concatenate([np.zeros((n, 1)), tx, ty, np.ones((n, 1))], axis=1)
    t.sort(axis=1)
    np.clip(t, 0.0, 1.0, out=t)
    t_mid = 0.5 * (t[:, :-1] + t[:, 1:])

    cell_x = np.floor((ax + t_mid * dx[:, None]) / pitch)
    cell_y = np.floor((ay + t_mid * dy[:, None]) / pitch)
    txa, txb = _band_window(ax, dx, cell_x, pitch, gap, field.building_side)
    tya, tyb = _band_window(ay, dy, cell_y, pitch, gap, field.building_side)
    t_in = np.maximum(np.maximum(txa, tya), 0.0)
    t_out = np.minimum(np.minimum(txb, tyb), 1.0)
    crossed = t_in <= t_out

    heights = building_heights(field, cell_x.astype(np.int64), cell_y.astype(np.int64))
    t_low = np.where(b_height <= a_height, t_out, t_in)
    link_height = a_height + t_low * (b_height - a_height)
    blocked = crossed & (heights >= link_height)
    return ~np.any(blocked, axis=1)


def segment_is_clear(field: BuildingField, a_xy: GroundPoint, a_height: float,
                     b_xy: GroundPoint, b_height: float) -> bool:
    """True iff the straight segment between the two terminals clears every
    building it passes over."""
    mask = _clear_mask(field, a_xy.x, a_xy.y, a_height,
                       np.array([b_xy.x]), np.array([b_xy.y]), b_height)
    return bool(mask[0])


def los_mask(scenario: Scenario) -> np.ndarray:
    """LOS flag for every base station in the scenario."""
    return _clear_mask(scenario.buildings, scenario.uav_xy.x, scenario.uav_xy.y,
                       scenario.uav_height, scenario.bs_xy[:, 0], scenario.bs_xy[:, 1],
                       scenario.bs_height)


def is_los(scenario: Scenario, bs) -> bool:
    idx = scenario.bs_index(bs)
    mask = _clear_mask(scenario.buildings, scenario.uav_xy.x, scenario.uav_xy.y,
                       scenario.uav_height, scenario.bs_xy[idx:idx + 1, 0],
                       scenario.bs_xy[idx:idx + 1, 1], scenario.bs_height)
    return bool(mask[0])


def scenario_to_json(scenario: Scenario) -> str:
    """Debug dump: base stations, seed and generation parameters."""
    f = scenario.buildings
    return json.dumps({
        "seed": scenario.seed,
        "uav": {"x": scenario.uav_xy.x, "y": scenario.uav_xy.y,
                "height_m": scenario.uav_height},
        "window_radius_m": scenario.window_radius,
        "bs_height_m": scenario.bs_height,
        "buildings": {"grid_pitch_m": f.grid_pitch, "building_side_m": f.building_side,
                      "height_scale_m": f.height_scale, "height_seed": f.height_seed,
                      "anchor_x_m": f.anchor_x, "anchor_y_m": f.anchor_y},
        "bs": [{"x": float(x), "y": float(y)} for x, y in scenario.bs_xy],
    }, indent=2)
