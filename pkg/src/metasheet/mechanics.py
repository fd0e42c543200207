"""Bistable dome unit cell: snap-through threshold, sensor readout and membrane stress."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np

from .errors import GeometryError, InputError

OPEN_CIRCUIT = math.inf

# Snap-through brackets measured on two shell thicknesses (mm):
# the dome stays put at the lower load and inverts at the upper one (N).
THICKNESS_BRACKETS = {0.8: (16.0, 18.0), 0.9: (18.0, 22.0)}


class DomeState(IntEnum):
    GROUND = 1
    INVERTED = -1


class SensorShape(str, Enum):
    LINEAR = "linear"
    CURVED = "curved"


@dataclass(frozen=True)
class DomeGeometry:
    """Shell geometry in mm, modulus in MPa. Forces come out in N."""

    height: float = 7.0
    thickness: float = 0.8
    dome_radius: float = 8.0
    cell_width: float = 30.0
    elastic_modulus: float = 26.0
    poisson: float = 0.45
    calibration_k: float = 1.0

    def __post_init__(self):
        for name in ("height", "thickness", "dome_radius", "cell_width", "elastic_modulus"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise GeometryError(f"{name} must be positive, got {val}")
        if not 0.0 < self.poisson < 0.5:
            raise GeometryError(f"poisson must lie in (0, 0.5), got {self.poisson}")
        if not self.dome_radius < self.cell_width / 2:
            raise GeometryError("dome_radius must be smaller than half the cell width")
        if not (self.calibration_k > 0 and math.isfinite(self.calibration_k)):
            raise GeometryError(f"calibration_k must be positive, got {self.calibration_k}")


def _shape_factor(geom: DomeGeometry) -> float:
    t = geom.thickness
    bending = geom.elastic_modulus * t**3 / (1.0 - geom.poisson**2)
    return bending * 4.0 * geom.height**2 / geom.dome_radius**2


def threshold_force(geom: DomeGeometry) -> float:
    """Snap-through load: k * E t^3 / (1 - nu^2) * 4 h^2 / r_d^2."""
    return geom.calibration_k * _shape_factor(geom)


def fit_calibration_k(geom: DomeGeometry, bracket: tuple[float, float]) -> float:
    """Prefactor placing the threshold at the middle of ``(no_invert, invert]``."""
    lo, hi = bracket
    if not 0 <= lo < hi:
        raise InputError(f"bracket must satisfy 0 <= lo < hi, got {bracket}")
    return 0.5 * (lo + hi) / _shape_factor(geom)


def calibration_table(geom: DomeGeometry | None = None, brackets=None) -> dict[float, float]:
    """Per-thickness prefactors fitted against the measured brackets."""
    geom = geom or DomeGeometry()
    brackets = THICKNESS_BRACKETS if brackets is None else brackets
    return {t: fit_calibration_k(replace(geom, thickness=t), b) for t, b in brackets.items()}


def global_fit(geom: DomeGeometry | None = None, brackets=None) -> tuple[float, float]:
    """Best single prefactor for all brackets and its worst violation in N.

    A threshold inside its bracket scores zero; otherwise the distance to the
    nearest admissible value. The minimax k balances the two worst brackets.
    Returns ``(k, residual_N)``; residual 0 means one k satisfies every bracket.
    """
    geom = geom or DomeGeometry()
    brackets = THICKNESS_BRACKETS if brackets is None else brackets
    bases = [(_shape_factor(replace(geom, thickness=t)), b) for t, b in brackets.items()]

    def worst(k):
        return max(max(lo - k * s, k * s - hi, 0.0) for s, (lo, hi) in bases)

    # candidate optima: bracket edges and pairwise balance points
    cands = []
    for s, (lo, hi) in bases:
        cands += [lo / s, hi / s]
    for s1, (lo1, _) in bases:
        for s2, (_, hi2) in bases:
            if s1 != s2:
                cands.append((lo1 + hi2) / (s1 + s2))
    k = min(cands, key=worst)
    return k, worst(k)


@dataclass(frozen=True)
class SensorSpec:
    shape: SensorShape = SensorShape.CURVED
    radial_offset: float = 10.0
    r_ground: float = 550.0
    r_inverted: float = 1000.0
    r_printed: float = 500.0
    spike_duration: float = 0.5
    spike_value: float = OPEN_CIRCUIT
    drift_per_cycle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", SensorShape(self.shape))
        if not self.r_inverted > self.r_ground > 0:
            raise InputError("sensor needs r_inverted > r_ground > 0")
        if not self.r_printed > 0:
            raise InputError("r_printed must be positive")
        if self.spike_duration < 0:
            raise InputError("spike_duration must be non-negative")

    @property
    def amplification(self) -> float:
        return (self.r_inverted - self.r_ground) / self.r_printed


def sensor_preset(shape: str | SensorShape) -> SensorSpec:
    """Sensor traces at r = 10 mm. The curved trace follows the stress peak."""
    shape = SensorShape(shape)
    if shape is SensorShape.LINEAR:
        return SensorSpec(shape=shape, r_inverted=750.0)
    return SensorSpec(shape=shape)


@dataclass(frozen=True)
class DomeUnit:
    geometry: DomeGeometry = field(default_factory=DomeGeometry)
    sensor: SensorSpec = field(default_factory=SensorSpec)
    state: DomeState = DomeState.GROUND
    last_event: float | None = None
    cycles: int = 0

    def __post_init__(self):
        object.__setattr__(self, "state", DomeState(self.state))
        if not self.sensor.radial_offset > self.geometry.dome_radius:
            raise GeometryError("sensor must sit outside the dome (radial_offset > dome_radius)")

    @property
    def threshold(self) -> float:
        return threshold_force(self.geometry)


def apply_force(unit: DomeUnit, f: float, now: float = 0.0) -> tuple[DomeUnit, bool]:
    """Press ``unit`` with ``f`` newtons. Returns the updated unit and whether it snapped."""
    if not f >= 0:
        raise InputError(f"force must be non-negative, got {f}")
    if unit.state is DomeState.GROUND and f >= unit.threshold:
        return replace(unit, state=DomeState.INVERTED, last_event=now), True
    return unit, False


def reset(unit: DomeUnit) -> DomeUnit:
    if unit.state is DomeState.GROUND:
        return unit
    return replace(unit, state=DomeState.GROUND, cycles=unit.cycles + 1)


def steady_resistance(unit: DomeUnit) -> float:
    s = unit.sensor
    base = s.r_ground if unit.state is DomeState.GROUND else s.r_inverted
    return base + s.drift_per_cycle * unit.cycles


def in_spike(unit: DomeUnit, now: float) -> bool:
    if unit.last_event is None:
        return False
    return 0.0 <= now - unit.last_event < unit.sensor.spike_duration


def sensor_resistance(unit: DomeUnit, now: float) -> float:
    """Two-level readout, with a brief open-circuit spike right after snap-through."""
    if in_spike(unit, now):
        return unit.sensor.spike_value
    return steady_resistance(unit)


@dataclass(frozen=True)
class StressConstants:
    d2: float
    d3: float
    d4: float


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InputError("radius must be positive")
    return r


def radial_stress(c: StressConstants, r):
    r = _check_radius(r)
    return c.d2 / r**2 + c.d3 + c.d4 * np.log(r)


def tangential_stress(c: StressConstants, r):
    r = _check_radius(r)
    return -c.d2 / r**2 + c.d3 + c.d4 * (1.0 + np.log(r))
