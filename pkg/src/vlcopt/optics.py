"""Photometric geometry for LED downlinks.

Lambertian emission orders, line-of-sight channel gains seen by a photodiode,
horizontal illuminance gains on the desk plane, and the per-configuration
beam poses used by the three light-source layouts (a: wide fixed, b: steered
narrow data beam, c: multi-chip with fixed narrow beams).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - type-only imports
    from .scenario import AccessPoint, Chip, Scenario

Vec3 = tuple[float, float, float]

_UNIT_TOL = 1e-9


def lambertian_order(theta_half_deg: float) -> float:
    """Lambertian mode number for a source with the given half-power semi-angle.

    Defined for semi-angles strictly between 0 and 90 degrees; tends to
    +inf as the beam narrows and to 0 as it widens toward a hemisphere.
    """
    if not 0.0 < theta_half_deg < 90.0:
        raise ValueError(
            f"theta_half_deg={theta_half_deg!r}: semi-angle must lie in (0, 90) degrees"
        )
    return -math.log(2.0) / math.log(math.cos(math.radians(theta_half_deg)))


@dataclass(frozen=True)
class BeamPose:
    """Origin, unit pointing direction and Lambertian order of one emitter."""

    origin: Vec3
    direction: Vec3
    ml: float

    def __post_init__(self) -> None:
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"beam direction must be a unit vector, |d|={norm}")
        if not self.ml > 0.0:
            raise ValueError(f"lambertian order must be positive, got {self.ml}")


@dataclass(frozen=True)
class LinkGeometry:
    """Distance plus radiance/incidence angles (radians) of one LOS path."""

    distance: float
    radiance_angle: float
    incidence_angle: float


def _unit(v: Sequence[float]) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(a))
    if n < 1e-12:
        raise ValueError("zero-length vector has no direction")
    return a / n


def link_geometry(tx: BeamPose, rx_position: Sequence[float], rx_normal: Sequence[float]) -> LinkGeometry:
    """Geometry between an emitter pose and a receiver aperture.

    The radiance angle is measured from the beam axis, the incidence angle
    from the receiver normal toward the emitter.
    """
    origin = np.asarray(tx.origin, dtype=float)
    rx = np.asarray(rx_position, dtype=float)
    d = rx - origin
    dist = float(np.linalg.norm(d))
    if dist < 1e-12:
        raise ValueError("transmitter and receiver are co-located")
    d_hat = d / dist
    n_hat = _unit(rx_normal)
    return LinkGeometry(dist, _angle(np.asarray(tx.direction, float), d_hat),
                        _angle(n_hat, -d_hat))


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    # atan2 of the rejection keeps full precision near 0 and pi, where acos
    # of a rounded dot product loses half the significant digits
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


def channel_gain(
    tx: BeamPose,
    rx_position: Sequence[float],
    rx_normal: Sequence[float],
    *,
    area_m2: float,
    fov_half_deg: float,
    filter_gain: float = 1.0,
    lens_index: float = 1.5,
) -> float:
    """LOS DC channel gain at a photodiode, zero outside its field of view.

    Uses an idealised non-imaging concentrator: gain lens_index^2 / sin^2(FOV)
    inside the field of view, nothing outside.
    """
    geo = link_geometry(tx, rx_position, rx_normal)
    fov = math.radians(fov_half_deg)
    if geo.incidence_angle > fov:
        return 0.0
    cos_rad = math.cos(geo.radiance_angle)
    cos_inc = math.cos(geo.incidence_angle)
    if cos_rad <= 0.0 or cos_inc <= 0.0:
        return 0.0
    concentrator = lens_index * lens_index / (math.sin(fov) ** 2)
    return (
        (tx.ml + 1.0)
        * area_m2
        / (2.0 * math.pi * geo.distance**2)
        * cos_rad**tx.ml
        * filter_gain
        * concentrator
        * cos_inc
    )


def illum_gain(tx: BeamPose, point: Sequence[float]) -> float:
    """Horizontal illuminance gain (1/m^2) at a desk-plane point facing +z."""
    return float(illum_gain_many(tx, np.asarray(point, float)[None, :])[0])


def illum_gain_many(tx: BeamPose, points: np.ndarray) -> np.ndarray:
    """Vectorised illum_gain over an (K, 3) array of desk-plane points."""
    origin = np.asarray(tx.origin, dtype=float)
    d = points - origin[None, :]
    dist2 = np.einsum("ij,ij->i", d, d)
    dist = np.sqrt(dist2)
    ok = dist > 1e-12
    cos_rad = np.zeros_like(dist)
    cos_inc = np.zeros_like(dist)
    direction = np.asarray(tx.direction, dtype=float)
    cos_rad[ok] = d[ok] @ direction / dist[ok]
    # surface faces straight up: incidence cosine is the height drop over range
    cos_inc[ok] = (origin[2] - points[ok, 2]) / dist[ok]
    out = np.zeros_like(dist)
    lit = ok & (cos_rad > 0.0) & (cos_inc > 0.0)
    out[lit] = (tx.ml + 1.0) / (2.0 * math.pi * dist2[lit]) * cos_rad[lit] ** tx.ml * cos_inc[lit]
    return out


def _vertical_pose(origin: Vec3, theta_half_deg: float) -> BeamPose:
    return BeamPose(origin, (0.0, 0.0, -1.0), lambertian_order(theta_half_deg))


def _aimed_pose(origin: Vec3, target: Sequence[float], theta_half_deg: float) -> BeamPose:
    d = _unit(np.asarray(target, float) - np.asarray(origin, float))
    return BeamPose(origin, (float(d[0]), float(d[1]), float(d[2])), lambertian_order(theta_half_deg))


def coverage_center(ap: "AccessPoint", chip: "Chip", plane_z: float) -> Vec3:
    """Desk-plane point a fixed narrow-beam chip is aimed at."""
    o = np.asarray(ap.position, float)
    d = np.asarray(chip.beam_direction, float)
    if d[2] >= -1e-12:
        raise ValueError("chip beam does not point down toward the desk plane")
    t = (plane_z - o[2]) / d[2]
    p = o + t * d
    return (float(p[0]), float(p[1]), float(plane_z))


def beam_for_link(
    config_kind: str,
    ap: "AccessPoint",
    chip: "Chip",
    ut_position: Sequence[float],
) -> tuple[BeamPose, BeamPose]:
    """AC (data) and DC (lighting) poses for a link served by `chip`.

    Config a: both vertical with the chip's wide semi-angles.
    Config b: lighting stays vertical, the data beam tracks the terminal.
    Config c: the data beam is the serving peripheral chip's fixed pose and
    lighting rides on the central chip; asking for AC on any other chip of
    the same access point is an error.
    """
    if config_kind == "a":
        dc = _vertical_pose(ap.position, chip.theta_half_dc_deg)
        ac = _vertical_pose(ap.position, chip.theta_half_ac_deg)
        return ac, dc
    if config_kind == "b":
        dc = _vertical_pose(ap.position, chip.theta_half_dc_deg)
        ac = _aimed_pose(ap.position, ut_position, chip.theta_half_ac_deg)
        return ac, dc
    if config_kind == "c":
        if chip.role != "peripheral":
            raise ValueError("config c carries data only on peripheral chips")
        serving = serving_chip_index(ap, ut_position)
        if ap.chips[serving] is not chip:
            raise ValueError(
                "config c: requested chip is not the serving chip for this terminal"
            )
        ac = BeamPose(ap.position, chip.beam_direction, lambertian_order(chip.theta_half_ac_deg))
        central = next(c for c in ap.chips if c.role == "central")
        dc = _vertical_pose(ap.position, central.theta_half_dc_deg)
        return ac, dc
    raise ValueError(f"unknown config kind {config_kind!r}")


def serving_chip_index(ap: "AccessPoint", ut_position: Sequence[float]) -> int:
    """Index of the peripheral chip whose coverage center is nearest the terminal."""
    ut = np.asarray(ut_position, float)
    best = -1
    best_d = math.inf
    for i, chip in enumerate(ap.chips):
        if chip.role != "peripheral":
            continue
        c = np.asarray(coverage_center(ap, chip, float(ut[2])), float)
        d = float(np.linalg.norm(c[:2] - ut[:2]))
        if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and best < 0):
            best, best_d = i, d
    if best < 0:
        raise ValueError("access point has no peripheral chips")
    return best


def illuminance_field(
    s: "Scenario",
    active_links: Iterable,
    dc_power: np.ndarray,
) -> np.ndarray:
    """Horizontal illuminance (lux) at every grid point for one operating state.

    `dc_power` is aligned with `s.dc_transmitters()`; `active_links` carry
    their own AC poses and average optical powers.
    """
    pts = s.grid_points()
    field = np.full(pts.shape[0], float(s.illum.ambient_lux))
    rho = s.constants.luminosity_efficacy
    dc = np.asarray(dc_power, dtype=float)
    txs = s.dc_transmitters()
    if dc.shape != (len(txs),):
        raise ValueError(f"dc_power must have shape ({len(txs)},), got {dc.shape}")
    for p, (ap_i, chip_i) in zip(dc, txs):
        if p == 0.0:
            continue
        ap = s.aps[ap_i]
        chip = ap.chips[chip_i]
        pose = _vertical_pose(ap.position, chip.theta_half_dc_deg)
        field += rho * p * illum_gain_many(pose, pts)
    for link in active_links:
        field += rho * link.p_ac_avg * illum_gain_many(link.ac_pose, pts)
    return field
