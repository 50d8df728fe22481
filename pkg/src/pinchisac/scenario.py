"""Physical parameters, geometry and activation schedules.

All quantities are stored in SI units (W, Hz, m) and linear scale; dB/dBm
values only appear at the configuration boundary.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

SPEED_OF_LIGHT = 2.998e8
CONSTRAINT_TOL = 1e-9


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class SystemParams:
    carrier_frequency: float = 30e9
    speed_of_light: float = SPEED_OF_LIGHT
    effective_refractive_index: float = 1.4
    waveguide_attenuation: float = 0.18  # nepers per meter, amplitude
    waveguide_length: float = 10.0
    pa_height: float = 3.0
    num_positions: int = 20
    num_slots: int = 4
    rx_antennas: int = 8
    noise_power: float = 1e-12
    rcs_mean: float = 1.0
    snr_threshold: float = 10.0
    transmit_power: float = 0.1
    min_rate: float = 0.5
    user_pos: Vec3 = Vec3(2.0, 2.0, 0.0)
    target_pos: Vec3 = Vec3(6.0, -3.0, 0.0)
    feed_pos: Vec3 = Vec3(0.0, 0.0, 3.0)
    rx_array_pos: Vec3 = Vec3(0.0, 0.0, 3.0)
    # explicit x coordinates of the candidate positions; None -> uniform grid
    pa_x: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("user_pos", "target_pos", "feed_pos", "rx_array_pos"):
            v = getattr(self, name)
            if not isinstance(v, Vec3):
                object.__setattr__(self, name, Vec3(*map(float, v)))
        if self.pa_x is not None:
            object.__setattr__(self, "pa_x", tuple(float(x) for x in self.pa_x))
        problems = self.check()
        if problems:
            raise ValueError("invalid SystemParams: " + "; ".join(problems))

    def check(self) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        out = []
        if self.num_positions < 2:
            out.append("num_positions must be >= 2")
        if self.num_slots < 1:
            out.append("num_slots must be >= 1")
        if self.num_slots > self.num_positions:
            out.append("num_slots must not exceed num_positions")
        if self.rx_antennas < 1:
            out.append("rx_antennas must be >= 1")
        for name in ("carrier_frequency", "speed_of_light", "noise_power",
                     "rcs_mean", "snr_threshold", "transmit_power",
                     "effective_refractive_index", "waveguide_length"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                out.append(f"{name} must be finite and > 0")
        if not (math.isfinite(self.waveguide_attenuation) and self.waveguide_attenuation >= 0):
            out.append("waveguide_attenuation must be finite and >= 0")
        if self.pa_height < 0 or not math.isfinite(self.pa_height):
            out.append("pa_height must be finite and >= 0")
        if self.min_rate < 0 or not math.isfinite(self.min_rate):
            out.append("min_rate must be finite and >= 0")
        for name in ("user_pos", "target_pos", "feed_pos", "rx_array_pos"):
            if not all(math.isfinite(c) for c in getattr(self, name)):
                out.append(f"{name} has non-finite components")
        if self.pa_x is not None:
            if len(self.pa_x) != self.num_positions:
                out.append("pa_x length must equal num_positions")
            elif any(not (0.0 <= x <= self.waveguide_length) for x in self.pa_x):
                out.append("pa_x entries must lie in [0, waveguide_length]")
        return out

    # derived constants
    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_frequency

    @property
    def guided_wavelength(self) -> float:
        return self.wavelength / self.effective_refractive_index

    @property
    def eta(self) -> float:
        """Free-space path-loss constant c / (4 pi f_c)."""
        return self.speed_of_light / (4.0 * math.pi * self.carrier_frequency)

    @property
    def beta0(self) -> float:
        # reference-distance path loss of the echo link, taken equal to eta
        return self.eta

    @property
    def pa_xs(self) -> np.ndarray:
        if self.pa_x is not None:
            return np.array(self.pa_x)
        M = self.num_positions
        return np.arange(M) * self.waveguide_length / (M - 1)

    @property
    def pa_positions(self) -> np.ndarray:
        """(M, 3) array of candidate positions on the waveguide."""
        xs = self.pa_xs
        out = np.zeros((xs.size, 3))
        out[:, 0] = xs
        out[:, 2] = self.pa_height
        return out

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


def default_params() -> SystemParams:
    return SystemParams()


@dataclass(frozen=True)
class SelectionSchedule:
    """T x M activation weights b_m(t), either relaxed or binary."""

    weights: np.ndarray
    mode: str = "relaxed"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2:
            raise ValueError("schedule weights must be a 2-D (T, M) array")
        if self.mode not in ("relaxed", "binary"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def num_slots(self) -> int:
        return self.weights.shape[0]

    def selected(self) -> np.ndarray:
        """Index of the activated position in each slot (argmax per row)."""
        return np.argmax(self.weights, axis=1)

    @classmethod
    def from_indices(cls, indices: Sequence[int], M: int) -> "SelectionSchedule":
        w = np.zeros((len(indices), M))
        w[np.arange(len(indices)), list(indices)] = 1.0
        return cls(w, "binary")

    @classmethod
    def uniform(cls, T: int, M: int) -> "SelectionSchedule":
        return cls(np.full((T, M), 1.0 / M), "relaxed")


def validate_schedule(s: SelectionSchedule, p: SystemParams,
                      allow_reuse: bool = False) -> list[str]:
    """Check C2-C4 for `s`; returns the violated constraints.

    ``allow_reuse`` skips the column (C3) check, which the fixed-position
    baseline violates by construction.
    """
    T, M = s.shape
    if (T, M) != (p.num_slots, p.num_positions):
        raise ValueError(
            f"schedule shape {(T, M)} does not match params "
            f"({p.num_slots}, {p.num_positions})")
    w = s.weights
    tol = CONSTRAINT_TOL
    violations = []
    if not np.all(np.isfinite(w)) or w.min() < -tol or w.max() > 1 + tol:
        violations.append("C4: entries outside [0, 1]")
    rows = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > tol)
    if bad.size:
        violations.append(f"C2: row sums != 1 in slots {bad.tolist()}")
    if not allow_reuse:
        cols = w.sum(axis=0)
        bad = np.flatnonzero(cols > 1.0 + tol)
        if bad.size:
            violations.append(f"C3: column sums > 1 at positions {bad.tolist()}")
    if s.mode == "binary" and not np.all((w == 0.0) | (w == 1.0)):
        violations.append("C4: binary schedule has fractional entries")
    return violations


# ---------------------------------------------------------------------------
# key = value configuration files

SCENARIO_KEYS = {
    "fc_hz": ("carrier_frequency", float),
    "n_eff": ("effective_refractive_index", float),
    "alpha_np_per_m": ("waveguide_attenuation", float),
    "waveguide_length_m": ("waveguide_length", float),
    "pa_height_m": ("pa_height", float),
    "num_positions": ("num_positions", int),
    "num_slots": ("num_slots", int),
    "nr_rx_antennas": ("rx_antennas", int),
    "noise_dbm": ("noise_power", lambda v: dbm_to_watts(float(v))),
    "rcs_mean_m2": ("rcs_mean", float),
    "gamma_th_db": ("snr_threshold", lambda v: db_to_linear(float(v))),
    "pt_dbm": ("transmit_power", lambda v: dbm_to_watts(float(v))),
    "rmin_bps_hz": ("min_rate", float),
    "user_xyz": ("user_pos", lambda v: parse_xyz(v)),
    "target_xyz": ("target_pos", lambda v: parse_xyz(v)),
    "feed_xyz": ("feed_pos", lambda v: parse_xyz(v)),
    "rx_array_xyz": ("rx_array_pos", lambda v: parse_xyz(v)),
}


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration input."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def parse_xyz(text: str) -> Vec3:
    parts = [t.strip() for t in str(text).split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated values, got {text!r}")
    return Vec3(*(float(t) for t in parts))


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_kv_file(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_kv_text(text)


def params_from_mapping(values: dict[str, str], base: SystemParams | None = None,
                        strict: bool = True) -> SystemParams:
    """Build SystemParams from scenario keys; missing keys keep `base` values.

    With ``strict`` unknown keys raise ConfigError; otherwise they are
    ignored (the CLI layer consumes them).
    """
    base = base or default_params()
    changes = {}
    for key, raw in values.items():
        if key not in SCENARIO_KEYS:
            if strict:
                raise ConfigError(f"unknown config key {key!r}", key)
            continue
        attr, conv = SCENARIO_KEYS[key]
        try:
            changes[attr] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})", key) from exc
    if "num_positions" in changes and base.pa_x is not None:
        changes.setdefault("pa_x", None)
    try:
        return base.replace(**changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_params(path: str | Path) -> SystemParams:
    return params_from_mapping(read_kv_file(path))
