"""Achievable link rates under the two interference views.

The scheduling layer prices links with an interference-free rate (conflicts
are delegated to the SIR graph); the validation pass recomputes rates with
the optical interference actually received from concurrently active beams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

from .optics import channel_gain

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Link


@dataclass(frozen=True)
class LinkRate:
    """Rates attached to one link: scheduling-time and validated."""

    link_index: int
    capacity_protocol: float
    capacity_physical: Optional[float] = None


def _check_common(bandwidth_hz: float, responsivity: float, gain: float,
                  p_ac: float, noise_variance: float) -> None:
    if bandwidth_hz < 0.0:
        raise ValueError(f"bandwidth_hz={bandwidth_hz}: must be >= 0")
    if responsivity <= 0.0:
        raise ValueError(f"responsivity={responsivity}: must be > 0")
    if gain < 0.0:
        raise ValueError(f"gain={gain}: must be >= 0")
    if p_ac < 0.0:
        raise ValueError(f"p_ac={p_ac}: must be >= 0")
    if noise_variance <= 0.0:
        raise ValueError(f"noise_variance={noise_variance}: must be > 0")


def protocol_capacity(
    bandwidth_hz: float,
    responsivity: float,
    gain: float,
    p_ac: float,
    noise_variance: float,
) -> float:
    """Shannon rate (bit/s) with all interference handled by exclusion."""
    _check_common(bandwidth_hz, responsivity, gain, p_ac, noise_variance)
    snr = (responsivity * gain * p_ac) ** 2 / noise_variance
    return bandwidth_hz * math.log2(1.0 + snr)


def physical_capacity(
    bandwidth_hz: float,
    responsivity: float,
    gain: float,
    p_ac: float,
    p_interference: float,
    noise_variance: float,
) -> float:
    """Shannon rate (bit/s) with received optical interference in the denominator."""
    _check_common(bandwidth_hz, responsivity, gain, p_ac, noise_variance)
    if p_interference < 0.0:
        raise ValueError(f"p_interference={p_interference}: must be >= 0")
    signal = (responsivity * gain * p_ac) ** 2
    denom = (responsivity * p_interference) ** 2 + noise_variance
    return bandwidth_hz * math.log2(1.0 + signal / denom)


def interference_power(victim: "Link", active_links: Iterable["Link"]) -> float:
    """Aggregate optical interference power (W) falling on a link's receiver.

    Sums over concurrently active links on the same channel, each seen through
    the victim receiver's field of view with the interferer's own beam pose.
    The victim's own transmitter contributes nothing.
    """
    total = 0.0
    rx = victim.receiver
    for other in active_links:
        if other.index == victim.index:
            continue
        if other.channel_index != victim.channel_index:
            continue
        h = channel_gain(
            other.ac_pose,
            victim.rx_position,
            victim.rx_normal,
            area_m2=rx.area_m2,
            fov_half_deg=rx.fov_half_deg,
            filter_gain=rx.filter_gain,
            lens_index=rx.lens_index,
        )
        total += h * other.p_ac_pp
    return total
