"""Composite pinching-antenna channels and the per-slot SNR gains.

Everything here is a deterministic function of the geometry. A relaxed row
``b`` of the schedule mixes the candidate positions coherently through the
inner product ``h^H b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import SystemParams


@dataclass(frozen=True)
class ChannelVector:
    gains: np.ndarray
    kind: str  # "user" or "target"

    def __post_init__(self):
        g = np.array(self.gains, dtype=complex, copy=True)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    def __len__(self):
        return self.gains.size

    def scaled(self, k: complex) -> "ChannelVector":
        return ChannelVector(self.gains * k, self.kind)


def composite_gains(point: np.ndarray, positions: np.ndarray, p: SystemParams,
                    numerator: float, waveguide: bool = True) -> np.ndarray:
    """Free-space term from each radiating position to `point`, times the
    in-waveguide term from the feed point when `waveguide` is set."""
    point = np.asarray(point, dtype=float)
    free = np.linalg.norm(point[None, :] - positions, axis=1)
    if np.any(free <= 0.0):
        raise ValueError("a radiating position coincides with the receiver location")
    k0 = 2.0 * math.pi / p.wavelength
    g = numerator * np.exp(-1j * k0 * free) / free
    if waveguide:
        guided = np.linalg.norm(positions - p.feed_pos.as_array()[None, :], axis=1)
        kg = 2.0 * math.pi / p.guided_wavelength
        g = g * np.exp((-p.waveguide_attenuation - 1j * kg) * guided)
    return g


def user_channel(p: SystemParams, positions: np.ndarray | None = None) -> ChannelVector:
    pos = p.pa_positions if positions is None else positions
    return ChannelVector(composite_gains(p.user_pos.as_array(), pos, p, p.eta), "user")


def target_channel(p: SystemParams, positions: np.ndarray | None = None) -> ChannelVector:
    # no eta in the numerator here, unlike the user link
    pos = p.pa_positions if positions is None else positions
    return ChannelVector(composite_gains(p.target_pos.as_array(), pos, p, 1.0), "target")


def inner(h: ChannelVector | np.ndarray, b: np.ndarray) -> np.ndarray:
    """h^H b for a row (M,) or a stack of rows (T, M)."""
    g = h.gains if isinstance(h, ChannelVector) else np.asarray(h)
    return np.asarray(b, dtype=float) @ np.conj(g)


def comm_snr(b_row: np.ndarray, h_u: ChannelVector, p: SystemParams):
    return p.transmit_power / p.noise_power * np.abs(inner(h_u, b_row)) ** 2


def comm_rate(gamma):
    return np.log2(1.0 + np.asarray(gamma, dtype=float))


def rate_gradient(b_row: np.ndarray, h_u: ChannelVector, p: SystemParams) -> np.ndarray:
    """Exact gradient of log2(1 + gamma(b)) with respect to the real row b.

    gamma = (p_t/sigma^2)|v.b|^2 with v = conj(h_u), so
    d gamma / d b = (p_t/sigma^2) * 2 Re(conj(v.b) v).
    """
    v = np.conj(h_u.gains)
    z = np.asarray(b_row, dtype=float) @ v
    k = p.transmit_power / p.noise_power
    dgamma = 2.0 * k * np.real(np.conj(z)[..., None] * v)
    gamma = k * np.abs(z) ** 2
    return dgamma / ((1.0 + gamma)[..., None] * math.log(2.0))


def steering_vector(theta: float, n: int) -> np.ndarray:
    """Half-wavelength ULA response toward angle theta (radians)."""
    return np.exp(1j * math.pi * np.arange(n) * math.sin(theta))


def target_angle(p: SystemParams) -> float:
    """Angle of the target seen from the receive array, from broadside of
    an array laid along the x axis."""
    d = p.target_pos.as_array() - p.rx_array_pos.as_array()
    dist = np.linalg.norm(d)
    if dist <= 0.0:
        raise ValueError("target coincides with the receive array")
    return math.asin(max(-1.0, min(1.0, d[0] / dist)))


def echo_distance(p: SystemParams) -> float:
    d = float(np.linalg.norm(p.target_pos.as_array() - p.rx_array_pos.as_array()))
    if d <= 0.0:
        raise ValueError("target coincides with the receive array")
    return d


def sensing_scale(p: SystemParams, theta: float | None = None) -> float:
    """Constant factor c_psi with psi(b) = c_psi * |h_e^H b|^2.

    The receive beamformer is matched to the steering vector, so the array
    contributes |u^H a_r|^2 = ||a_r||^2 = N_R whatever the angle.
    """
    d_er = echo_distance(p)
    a = steering_vector(target_angle(p) if theta is None else theta, p.rx_antennas)
    u = a / np.linalg.norm(a)
    array_gain = abs(np.vdot(u, a)) ** 2
    return p.transmit_power * p.beta0 ** 2 * array_gain / (p.noise_power * d_er ** 2)


def sensing_gain(b_row: np.ndarray, h_e: ChannelVector, p: SystemParams,
                 theta: float | None = None):
    return sensing_scale(p, theta) * np.abs(inner(h_e, b_row)) ** 2


def quad_parts(h: ChannelVector) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of v = conj(h): |h^H b|^2 = (vr.b)^2 + (vi.b)^2."""
    v = np.conj(h.gains)
    return v.real.copy(), v.imag.copy()


@dataclass(frozen=True)
class Channels:
    """User and target channels over one set of radiating positions."""

    user: ChannelVector
    target: ChannelVector

    @classmethod
    def from_params(cls, p: SystemParams, positions: np.ndarray | None = None):
        return cls(user_channel(p, positions), target_channel(p, positions))

    @property
    def num_positions(self) -> int:
        return len(self.user)
