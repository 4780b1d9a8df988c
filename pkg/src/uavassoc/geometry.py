"""Planar/vertical link geometry and the ring-sector antenna footprint.

A UAV aiming a conical beam of width ``omega`` at a ground station
illuminates an annular wedge on the ground. These helpers compute the
wedge radii, the link elevation angles and footprint membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class GroundPoint:
    """A point on the ground plane, meters."""

    x: float
    y: float

    def distance_to(self, other: "GroundPoint") -> float:
        return float(np.hypot(other.x - self.x, other.y - self.y))


@dataclass(frozen=True)
class VerticalGeometry:
    """Horizontal range, signed height difference and elevation of a link.

    ``phi`` lies in (-pi/2, pi/2]; a link straight up/down maps to +-pi/2,
    with the degenerate zero-length link fixed at +pi/2.
    """

    r: float
    delta_gamma: float
    phi: float


@dataclass(frozen=True)
class RingSector:
    """Annular wedge centered on the UAV ground projection.

    ``outer_radius`` is ``math.inf`` when the footprint is unbounded
    outward; membership then reduces to the inner radius and arc tests.
    """

    center: GroundPoint
    azimuth_center: float
    arc_angle: float
    inner_radius: float
    outer_radius: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.outer_radius)


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into [-pi, pi)."""
    return (theta + math.pi) % TWO_PI - math.pi


def elevation(delta_gamma, r):
    """Elevation angle(s) of links; +pi/2 when both arguments are zero."""
    phi = np.arctan2(delta_gamma, r)
    return np.where((np.asarray(r) == 0) & (np.asarray(delta_gamma) == 0), HALF_PI, phi)


def vertical_geometry(uav_xy: GroundPoint, uav_height: float,
                      bs_xy: GroundPoint, bs_height: float) -> VerticalGeometry:
    """Horizontal distance, height difference and elevation of one link."""
    r = uav_xy.distance_to(bs_xy)
    dg = uav_height - bs_height
    return VerticalGeometry(r=r, delta_gamma=dg, phi=float(elevation(dg, r)))


def sector_radii(delta_gamma: float, phi: float, omega: float) -> tuple[float, float]:
    """Inner and outer footprint radii for a beam of width ``omega`` aimed
    at elevation ``phi`` across a height offset ``delta_gamma``.

    Piecewise in |phi|: the outer radius is finite only while the lower
    beam edge still points below the horizon; boundary angles are resolved
    into the earlier branch. A non-positive tangent (beam edge at or above
    horizontal) yields an unbounded footprint.
    """
    if not 0.0 < omega < math.pi:
        raise InvalidConfigurationError(f"beamwidth must lie in (0, pi), got {omega}")
    adg = abs(delta_gamma)
    aphi = abs(phi)
    half = 0.5 * omega

    if aphi <= HALF_PI - half:
        inner = adg / math.tan(aphi + half)
    else:
        inner = 0.0

    if half < aphi <= HALF_PI - half:
        t = math.tan(aphi - half)
        outer = adg / t if t > 0.0 else math.inf
    elif aphi > HALF_PI - half:
        t = math.tan(HALF_PI - omega)
        outer = adg / t if t > 0.0 else math.inf
    else:
        outer = math.inf
    return inner, outer


def ring_sector(uav_height: float, bs_height: float, serving: GroundPoint,
                uav_xy: GroundPoint, omega: float) -> RingSector:
    """Ground footprint of the UAV main lobe when aimed at ``serving``."""
    dx = serving.x - uav_xy.x
    dy = serving.y - uav_xy.y
    r_s = float(np.hypot(dx, dy))
    dg = uav_height - bs_height
    phi = float(elevation(dg, r_s))
    azimuth = float(np.arctan2(dy, dx))
    inner, outer = sector_radii(dg, phi, omega)
    return RingSector(center=uav_xy, azimuth_center=azimuth, arc_angle=omega,
                      inner_radius=inner, outer_radius=outer)


def footprint_mask_polar(radius, theta, azimuth_center, arc_angle, inner, outer):
    """Membership test in polar form; shared by scalar and batched paths so
    both round identically."""
    dtheta = wrap_angle(theta - azimuth_center)
    return (radius >= inner) & (radius <= outer) & (np.abs(dtheta) <= 0.5 * arc_angle)


def footprint_mask(sector: RingSector, xs, ys):
    """Vectorized membership of points (xs, ys) in a ring sector."""
    dx = np.asarray(xs, dtype=float) - sector.center.x
    dy = np.asarray(ys, dtype=float) - sector.center.y
    radius = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    return footprint_mask_polar(radius, theta, sector.azimuth_center,
                                sector.arc_angle, sector.inner_radius,
                                sector.outer_radius)


def in_footprint(sector: RingSector, point: GroundPoint) -> bool:
    """True iff ``point`` lies inside the annular wedge (boundaries included)."""
    return bool(footprint_mask(sector, point.x, point.y))
