"""Transduction chain from dome sensor to memristor write voltage.

sensor -> follower divider -> differential amplifier -> switch regulator,
with an XOR gate for memristors that sit between two domes and a series
resistor for reading the memristor back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .mechanics import DomeState, DomeUnit, in_spike, sensor_resistance, steady_resistance
from .memristor import VoltagePulse


@dataclass(frozen=True)
class AmplifierConfig:
    r1: float = 100.0
    r2: float = 2000.0
    r3: float = 100.0
    r4: float = 2000.0
    r_ref: float = 550.0
    v_in1: float = 2.0
    v_in2: float = 1.0
    rail: float = 12.0

    def __post_init__(self):
        for name in ("r1", "r2", "r3", "r4", "r_ref", "rail"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        # only the matched-resistor gain form is modelled
        if self.r1 != self.r3 or self.r2 != self.r4:
            raise InputError("amplifier needs r1 == r3 and r2 == r4")

    @property
    def gain(self) -> float:
        return self.r2 / self.r1


@dataclass(frozen=True)
class RegulatorConfig:
    threshold: float = 5.0
    out_amplitude: float = 5.0

    def __post_init__(self):
        if not (self.threshold > 0 and self.out_amplitude > 0):
            raise InputError("regulator threshold and amplitude must be positive")


@dataclass(frozen=True)
class ReadoutConfig:
    r_series: float = 500.0
    read_amplitude: float = 1.5
    read_width: float = 10.0

    def __post_init__(self):
        if not self.r_series > 0:
            raise InputError("r_series must be positive")


@dataclass(frozen=True)
class CircuitConfig:
    amplifier: AmplifierConfig = field(default_factory=AmplifierConfig)
    regulator: RegulatorConfig = field(default_factory=RegulatorConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    debounce: float | None = None  # s; None uses each sensor's spike_duration


def follower_output(cfg: AmplifierConfig, r_eps: float) -> float:
    """Divider with the sensor on the measured leg: V11 = v_in1 r_eps / (r_ref + r_eps)."""
    if r_eps < 0 or math.isnan(r_eps):
        raise InputError(f"sensor resistance must be non-negative, got {r_eps}")
    if math.isinf(r_eps):
        return cfg.v_in1
    return cfg.v_in1 * r_eps / (cfg.r_ref + r_eps)


def amp_output(cfg: AmplifierConfig, v_in11: float) -> float:
    v = cfg.gain * (v_in11 - cfg.v_in2)
    return min(max(v, -cfg.rail), cfg.rail)


def regulate(cfg: RegulatorConfig, v: float) -> float:
    return cfg.out_amplitude if v >= cfg.threshold else 0.0


def memristor_voltage(readout: ReadoutConfig, v_in: float, m: float) -> float:
    if not m > 0:
        raise InputError("memristance must be positive")
    return v_in * m / (m + readout.r_series)


def xor_write_enable(a: DomeState, b: DomeState) -> bool:
    return DomeState(a) != DomeState(b)


def unit_drive(unit: DomeUnit, chain: CircuitConfig, now: float = math.inf) -> float:
    """Regulator output driven by one dome's sensor at time ``now``.

    Snap-through spikes no longer than the debounce window are ignored.
    """
    debounce = unit.sensor.spike_duration if chain.debounce is None else chain.debounce
    if in_spike(unit, now) and unit.sensor.spike_duration <= debounce:
        r = steady_resistance(unit)
    else:
        r = sensor_resistance(unit, now)
    v11 = follower_output(chain.amplifier, r)
    return regulate(chain.regulator, amp_output(chain.amplifier, v11))


def write_voltage(units, supply_on: bool, chain: CircuitConfig, now: float = math.inf) -> float:
    """Level-triggered write voltage for one unit or a ``(unit_a, unit_b)`` pair."""
    if not supply_on:
        return 0.0
    if isinstance(units, DomeUnit):
        return unit_drive(units, chain, now)
    a, b = units
    fired_a = unit_drive(a, chain, now) > 0
    fired_b = unit_drive(b, chain, now) > 0
    return chain.regulator.out_amplitude if fired_a != fired_b else 0.0


def transduce(units, times, supply: VoltagePulse, chain: CircuitConfig) -> np.ndarray:
    """Write waveform over ``times``: the supply gate times the dome-state gate."""
    times = np.asarray(times, dtype=float)
    on = supply.active(times)
    return np.array([write_voltage(units, bool(o), chain, float(t)) for t, o in zip(times, on)])
