"""Antenna gains, pathloss, Nakagami fading and downlink SINR.

The UAV carries two antennas: an omni element (gain 1) used for power
measurement, and a steerable cone of beamwidth ``omega`` whose gain is
16*pi/omega^2 inside the main lobe and zero outside. Base stations use a
vertical uniform linear array whose gain peaks toward the horizon, which
is what makes distant stations look strong to a high-flying UAV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import Scenario, los_mask
from .errors import InvalidConfigurationError
from .geometry import (HALF_PI, VerticalGeometry, elevation,
                       footprint_mask_polar, sector_radii)

_ULA_SING_EPS = 1e-6
_POWER_FLOOR = 1e-300


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class AntennaConfig:
    """UAV beamwidth (radians) and BS array element count."""

    omega: float
    n_elements: int

    def __post_init__(self):
        if not 0.0 < self.omega < math.pi:
            raise InvalidConfigurationError(f"beamwidth must lie in (0, pi), got {self.omega}")
        if self.n_elements < 1:
            raise InvalidConfigurationError(f"array needs >= 1 elements, got {self.n_elements}")


@dataclass(frozen=True)
class ChannelParams:
    """Transmit power, pathloss/fading constants, noise and SINR threshold.

    ``near_field`` and ``threshold`` are linear (not dB).
    """

    tx_power_w: float
    alpha_los: float
    alpha_nlos: float
    fading_m_los: float
    fading_m_nlos: float
    near_field: float
    noise_w: float
    threshold: float

    def __post_init__(self):
        for name in ("tx_power_w", "alpha_los", "alpha_nlos", "fading_m_los",
                     "fading_m_nlos", "near_field", "noise_w", "threshold"):
            if getattr(self, name) <= 0.0:
                raise InvalidConfigurationError(f"{name} must be positive")
        if self.alpha_nlos < self.alpha_los:
            raise InvalidConfigurationError("NLOS pathloss exponent must be >= LOS exponent")


@dataclass(frozen=True)
class LinkState:
    geometry: VerticalGeometry
    los: bool


def uav_antenna_gain(omega: float) -> float:
    """Main-lobe gain of the rectangular-pattern cone: 16*pi/omega^2."""
    if not 0.0 < omega < math.pi:
        raise InvalidConfigurationError(f"beamwidth must lie in (0, pi), got {omega}")
    return 16.0 * math.pi / (omega * omega)


def ula_gain(phi, n_elements: int):
    """Vertical array-factor power gain of an N-element half-wavelength ULA.

    sin^2(N*x)/(N*sin^2(x)) with x = (pi/2)*sin(phi). The removable
    singularity at x = 0 (value N) is evaluated by a second-order series
    whenever |sin x| < 1e-6.
    """
    n = n_elements
    x = HALF_PI * np.sin(phi)
    s = np.sin(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.sin(n * x) ** 2 / (n * s * s)
    series = n * (1.0 - (n * n - 1.0) * x * x / 3.0)
    return np.where(np.abs(s) < _ULA_SING_EPS, series, raw)


def bs_vertical_gain(phi: float, n_elements: int) -> float:
    return float(ula_gain(np.asarray(phi, dtype=float), n_elements))


def mean_rx_power_omni(link: LinkState, params: ChannelParams,
                       n_elements: int = 1) -> float:
    """Fading-free mean power at the omni antenna (UAV gain 1):
    p * mu(phi) * c * d^-alpha with alpha picked by the LOS flag."""
    g = link.geometry
    d2 = g.r * g.r + g.delta_gamma * g.delta_gamma
    alpha = params.alpha_los if link.los else params.alpha_nlos
    return (params.tx_power_w * bs_vertical_gain(g.phi, n_elements)
            * params.near_field * d2 ** (-0.5 * alpha))


def sample_fading(m: float, rng, size=None):
    """Nakagami-m multipath power gain: Gamma(m, 1/m), unit mean."""
    if m < 0.5:
        raise InvalidConfigurationError(f"Nakagami shape must be >= 0.5, got {m}")
    return rng.gamma(m, 1.0 / m, size)


@dataclass
class LinkTable:
    """Per-scenario link quantities for every base station, precomputed once
    and shared across candidate evaluations. Immutable by convention."""

    scenario: Scenario
    n_elements: int
    delta_gamma: float
    r: np.ndarray        # horizontal distances
    azimuth: np.ndarray  # azimuth of each BS seen from the UAV
    phi: np.ndarray      # elevation angles
    dist: np.ndarray     # 3D distances
    los: np.ndarray      # bool flags
    alpha: np.ndarray    # pathloss exponent per link
    mu: np.ndarray       # ULA vertical gain per link
    p_omni: np.ndarray   # mean omni received power per link, W
    fading_m: np.ndarray

    @classmethod
    def build(cls, scenario: Scenario, params: ChannelParams,
              n_elements: int) -> "LinkTable":
        dx = scenario.bs_xy[:, 0] - scenario.uav_xy.x
        dy = scenario.bs_xy[:, 1] - scenario.uav_xy.y
        r = np.hypot(dx, dy)
        azimuth = np.arctan2(dy, dx)
        dg = scenario.uav_height - scenario.bs_height
        phi = np.asarray(elevation(dg, r), dtype=float)
        dist = np.sqrt(r * r + dg * dg)
        los = los_mask(scenario)
        alpha = np.where(los, params.alpha_los, params.alpha_nlos)
        mu = ula_gain(phi, n_elements)
        p_omni = params.tx_power_w * mu * params.near_field * dist ** (-alpha)
        fading_m = np.where(los, params.fading_m_los, params.fading_m_nlos)
        return cls(scenario=scenario, n_elements=n_elements, delta_gamma=dg,
                   r=r, azimuth=azimuth, phi=phi, dist=dist, los=los,
                   alpha=alpha, mu=mu, p_omni=p_omni, fading_m=fading_m)

    @property
    def n_bs(self) -> int:
        return self.r.shape[0]

    def footprint_mask(self, serving_index: int, omega: float) -> np.ndarray:
        """Which base stations fall inside the main-lobe footprint when the
        UAV aims at ``serving_index`` (the serving BS itself included)."""
        inner, outer = sector_radii(self.delta_gamma, float(self.phi[serving_index]), omega)
        return footprint_mask_polar(self.r, self.azimuth,
                                    float(self.azimuth[serving_index]), omega,
                                    inner, outer)

    def sample_fading_gains(self, rng) -> np.ndarray:
        """One multipath gain per base station, shape parameter by LOS flag."""
        return rng.gamma(self.fading_m, 1.0 / self.fading_m)


def _resolve_table(scenario, params, n_elements, table) -> LinkTable:
    if table is None:
        return LinkTable.build(scenario, params, n_elements)
    return table


def _fading_gains(table: LinkTable, fading_mode: str, rng, fading_gains):
    if fading_mode == "mean":
        return np.ones(table.n_bs)
    if fading_mode == "sampled":
        if fading_gains is not None:
            return fading_gains
        if rng is None:
            raise ValueError("rng is required when fading_mode='sampled'")
        return table.sample_fading_gains(rng)
    raise ValueError(f"unknown fading_mode {fading_mode!r}")


def directional_sinr_from_table(table: LinkTable, serving_index: int, omega: float,
                                params: ChannelParams, gains: np.ndarray) -> float:
    """Downlink SINR through the steered cone: signal from the serving BS,
    interference from the other stations inside the footprint, plus noise."""
    mask = table.footprint_mask(serving_index, omega)
    mask[serving_index] = False
    eta = uav_antenna_gain(omega)
    signal = eta * gains[serving_index] * table.p_omni[serving_index]
    interference = eta * float(np.sum(gains[mask] * table.p_omni[mask]))
    return float(signal / (interference + params.noise_w))


def directional_sinr(scenario: Scenario, serving_bs, antenna: AntennaConfig,
                     params: ChannelParams, fading_mode: str = "mean", rng=None,
                     *, table: LinkTable | None = None, fading_gains=None) -> float:
    """SINR of the serving downlink when the UAV steers its cone at
    ``serving_bs``. fading_mode='mean' fixes every multipath gain at its
    unit mean (deterministic); 'sampled' draws one gain per station."""
    table = _resolve_table(scenario, params, antenna.n_elements, table)
    idx = scenario.bs_index(serving_bs)
    gains = _fading_gains(table, fading_mode, rng, fading_gains)
    return directional_sinr_from_table(table, idx, antenna.omega, params, gains)


def omni_sinr_from_table(table: LinkTable, candidate_index: int,
                         params: ChannelParams, gains: np.ndarray) -> float:
    power = gains * table.p_omni
    signal = float(power[candidate_index])
    interference = float(np.sum(power)) - signal
    return signal / (interference + params.noise_w)


def omni_sinr(scenario: Scenario, candidate_bs, params: ChannelParams,
              fading_mode: str = "mean", rng=None, *, n_elements: int = 1,
              table: LinkTable | None = None, fading_gains=None) -> float:
    """SINR a candidate would show on the omni antenna: unit UAV gain and
    every other in-window station interfering."""
    table = _resolve_table(scenario, params, n_elements, table)
    idx = scenario.bs_index(candidate_bs)
    gains = _fading_gains(table, fading_mode, rng, fading_gains)
    return omni_sinr_from_table(table, idx, params, gains)
