"""Three-stage measurement protocol on an m x n metasheet.

Stage 1 pre-sets every memristor (INIT). Stage 2 calibrates the read-voltage
drop of one write pulse per device. Stage 3 presents force patterns; each
pair memristor receives one write pulse whenever exactly one of its two domes
is inverted, and the accumulated drop is converted back into event counts U.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import hopfield
from .circuit import CircuitConfig, write_voltage
from .errors import CalibrationError, InputError
from .mechanics import DomeGeometry, DomeState, DomeUnit, SensorSpec, apply_force, reset
from .memristor import (MemristorParams, MemristorState, VoltagePulse, apply_voltage,
                        divided_voltage, init_pulse, sample_device)


@dataclass(frozen=True)
class StageConfig:
    init_pulse: VoltagePulse = VoltagePulse(4.3, 20.0)
    write_pulse: VoltagePulse = VoltagePulse(4.3, 5.0)
    read_pulse: VoltagePulse = VoltagePulse(1.5, 10.0)
    calibration_writes: int = 4
    inter_pulse_gap: float = 1.0

    def __post_init__(self):
        if self.calibration_writes < 1:
            raise InputError("calibration_writes must be >= 1")
        if self.inter_pulse_gap < 0:
            raise InputError("inter_pulse_gap must be non-negative")


@dataclass(frozen=True)
class PatternSequence:
    """Force maps (N newton values each), presented in order."""

    patterns: tuple
    reset_between: bool = True

    def __post_init__(self):
        maps = tuple(tuple(float(f) for f in p) for p in self.patterns)
        if maps and len({len(p) for p in maps}) != 1:
            raise InputError("all force maps must have the same length")
        object.__setattr__(self, "patterns", maps)

    @classmethod
    def from_spins(cls, spins, thresholds, scale: float = 1.2, reset_between: bool = True):
        """Inverted (-1) entries get ``scale`` times the unit threshold, ground entries 0 N."""
        thresholds = np.asarray(thresholds, dtype=float)
        maps = []
        for s in spins:
            s = np.asarray(s)
            maps.append(np.where(s < 0, scale * thresholds, 0.0))
        return cls(tuple(maps), reset_between)


def pair_index_map(m: int, n: int) -> list[tuple[int, int]]:
    """Upper-triangular unit pairs (0-based, row-major); one memristor each."""
    if m < 1 or n < 1 or m * n < 2:
        raise InputError("need m, n >= 1 and at least two units")
    return hopfield.upper_pairs(m * n)


@dataclass
class Metasheet:
    m: int
    n: int
    units: list

    @classmethod
    def uniform(cls, m: int, n: int, geometry: DomeGeometry | None = None,
                sensor: SensorSpec | None = None) -> "Metasheet":
        geometry = geometry or DomeGeometry()
        sensor = sensor or SensorSpec()
        return cls(m, n, [DomeUnit(geometry, sensor) for _ in range(m * n)])

    @property
    def size(self) -> int:
        return self.m * self.n

    @property
    def states(self) -> np.ndarray:
        return np.array([int(u.state) for u in self.units], dtype=np.int64)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([u.threshold for u in self.units])

    def apply_forces(self, forces, now: float = 0.0) -> list[int]:
        """Press every unit; returns indices of units that snapped."""
        if len(forces) != self.size:
            raise InputError(f"force map has {len(forces)} entries for {self.size} units")
        snapped = []
        for k, f in enumerate(forces):
            self.units[k], event = apply_force(self.units[k], float(f), now)
            if event:
                snapped.append(k)
        return snapped

    def reset_all(self):
        self.units = [reset(u) for u in self.units]


TRACE_COLUMNS = ("t_s", "supply_V", "v_m_V", "M_ohm", "marker")


class ExperimentTrace:
    """Per-memristor records plus a shared event log and clock."""

    def __init__(self, n_devices: int):
        self.records = [[] for _ in range(n_devices)]
        self.events = []  # (t, kind, detail)
        self.warnings = []
        self.now = 0.0

    def log(self, dev: int, supply: float, v_m: float, m: float, marker: str = ""):
        self.records[dev].append((self.now, supply, v_m, m, marker))

    def event(self, kind: str, detail=None):
        self.events.append((self.now, kind, detail))

    def advance(self, dt: float):
        self.now += dt

    def markers(self, dev: int, marker: str) -> list:
        return [r for r in self.records[dev] if r[4] == marker]

    def series(self, dev: int) -> np.ndarray:
        return np.array([r[:4] for r in self.records[dev]], dtype=float).reshape(-1, 4)


def _read(devices, stage: StageConfig, r_series: float, trace, marker: str) -> np.ndarray:
    pulse = stage.read_pulse
    out = np.empty(len(devices))
    trace.advance(pulse.width)
    for k, dev in enumerate(devices):
        after = apply_voltage(dev, pulse.amplitude, pulse.width, None, r_series)
        if after.dose != dev.dose:
            raise CalibrationError(f"read pulse disturbed device {k}", device=k)
        m = dev.memristance
        out[k] = divided_voltage(pulse.amplitude, m, r_series)
        trace.log(k, pulse.amplitude, out[k], m, marker)
    trace.advance(stage.inter_pulse_gap)
    return out


def _write(dev, k, v, stage, r_series, trace, rng, marker):
    pulse = stage.write_pulse
    if v > 0:
        dev = apply_voltage(dev, v, pulse.width, rng, r_series)
    m = dev.memristance
    trace.log(k, v, divided_voltage(v, m, r_series), m, marker if v > 0 else "idle")
    return dev


def run_init(devices, stage: StageConfig, r_series: float, trace: ExperimentTrace, rngs=None):
    trace.event("stage", "init")
    pulse = stage.init_pulse
    trace.advance(pulse.width)
    out = []
    for k, dev in enumerate(devices):
        dev = init_pulse(dev, pulse.amplitude, pulse.width, r_series, rngs[k] if rngs else None)
        m = dev.memristance
        trace.log(k, pulse.amplitude, divided_voltage(pulse.amplitude, m, r_series), m, "init")
        out.append(dev)
    trace.advance(stage.inter_pulse_gap)
    return out


def run_calibration(devices, stage: StageConfig, r_series: float = 500.0,
                    trace: ExperimentTrace | None = None, rngs=None):
    """Read, fire ``calibration_writes`` pulses, read again.

    Returns ``(dv, devices)`` with ``dv[i]`` the mean read-voltage drop per pulse.
    """
    trace = trace or ExperimentTrace(len(devices))
    trace.event("stage", "calibration")
    v0 = _read(devices, stage, r_series, trace, "read_cal0")
    devices = list(devices)
    amp = stage.write_pulse.amplitude
    for _ in range(stage.calibration_writes):
        trace.advance(stage.write_pulse.width)
        for k in range(len(devices)):
            devices[k] = _write(devices[k], k, amp, stage, r_series, trace,
                                rngs[k] if rngs else None, "cal_write")
        trace.advance(stage.inter_pulse_gap)
    vf = _read(devices, stage, r_series, trace, "read_cal1")
    dv = (v0 - vf) / stage.calibration_writes
    for k, d in enumerate(dv):
        if not d > 0:
            raise CalibrationError(f"device {k} did not respond to calibration writes", device=k)
    return dv, devices


@dataclass
class TrainingResult:
    u: np.ndarray
    v0: np.ndarray
    vf: np.ndarray
    devices: list
    spins: list  # dome states seen at each presentation
    trace: ExperimentTrace


def run_training(metasheet: Metasheet, devices, seq: PatternSequence, stage: StageConfig,
                 dv, chain: CircuitConfig | None = None, trace: ExperimentTrace | None = None,
                 rngs=None) -> TrainingResult:
    """Present each force map, gate one write pulse per differing pair, read back U."""
    chain = chain or CircuitConfig()
    r_series = chain.readout.r_series
    chain = replace(chain, regulator=replace(chain.regulator,
                                             out_amplitude=stage.write_pulse.amplitude))
    pairs = pair_index_map(metasheet.m, metasheet.n)
    if len(devices) != len(pairs):
        raise InputError(f"{len(devices)} devices for {len(pairs)} unit pairs")
    trace = trace or ExperimentTrace(len(devices))
    devices = list(devices)
    trace.event("stage", "training")
    v0 = _read(devices, stage, r_series, trace, "read_train0")
    spins = []
    for forces in seq.patterns:
        for k in metasheet.apply_forces(forces, trace.now):
            trace.event("inversion", k)
        spins.append(metasheet.states)
        trace.advance(stage.write_pulse.width)
        for d, (i, j) in enumerate(pairs):
            v = write_voltage((metasheet.units[i], metasheet.units[j]), True, chain, trace.now)
            devices[d] = _write(devices[d], d, v, stage, r_series, trace,
                                rngs[d] if rngs else None, "write")
        trace.advance(stage.inter_pulse_gap)
        if seq.reset_between:
            metasheet.reset_all()
    vf = _read(devices, stage, r_series, trace, "read_train1")
    for d, dev in enumerate(devices):
        if dev.x >= 0.999:
            trace.warnings.append(f"device {d} saturated near LRS")
    u = hopfield.u_from_voltages(v0, vf, dv)
    return TrainingResult(u, v0, vf, devices, spins, trace)


@dataclass
class ExperimentReport:
    seed: int
    config_hash: str
    mode: str
    stored: list
    u: list
    u_expected: list
    dv: list
    j: list
    j_offline: list
    sigma: float
    accuracy: float
    offline_accuracy: float
    histogram: dict
    unconverged: int
    fixed_points: dict  # stored pattern -> fixed point under the trained weights
    landscape: list
    warnings: list = field(default_factory=list)
    trace: ExperimentTrace | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = asdict(replace(self, trace=None))
        d.pop("trace")
        d["histogram"] = {str(k): v for k, v in self.histogram.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        d = dict(d)
        d["histogram"] = {int(k): v for k, v in d["histogram"].items()}
        return cls(**d)


def build_devices(params: MemristorParams, count: int, seed_seq) -> tuple[list, list]:
    """Sampled devices and their cycle-noise generators, one stream per device."""
    devices, rngs = [], []
    for ss in seed_seq.spawn(count):
        rng = np.random.default_rng(ss)
        devices.append(MemristorState(sample_device(params, rng)))
        rngs.append(rng)
    return devices, rngs


def run_full_experiment(config) -> ExperimentReport:
    """INIT -> calibration -> training -> weights -> accuracy -> landscape."""
    from .config import config_hash

    proto = config.protocol
    hop = config.hopfield
    root = np.random.SeedSequence(config.seed)
    dev_ss, eval_ss = root.spawn(2)
    eval_seed = int(eval_ss.generate_state(1, np.uint64)[0])

    sheet = Metasheet.uniform(proto.m, proto.n, config.geometry, config.sensor)
    spins = proto.ordered_spins()
    stored = proto.stored_spins()
    pairs = pair_index_map(proto.m, proto.n)
    devices, rngs = build_devices(config.memristor, len(pairs), dev_ss)

    trace = ExperimentTrace(len(devices))
    r_s = config.circuit.readout.r_series
    devices = run_init(devices, proto.stage, r_s, trace, rngs)
    dv, devices = run_calibration(devices, proto.stage, r_s, trace, rngs)
    seq = PatternSequence.from_spins(spins, sheet.thresholds, proto.force_scale, proto.reset_between)
    res = run_training(sheet, devices, seq, proto.stage, dv, config.circuit, trace, rngs)

    p = len(spins)
    j = hopfield.transform_weights(hopfield.assemble_jm(res.u), hop.mode, p)
    j_off = hopfield.hebbian_matrix(spins) if p else np.zeros((sheet.size, sheet.size))
    kw = dict(trials=hop.trials, sigma=hop.sigma, seed=eval_seed, max_iter=hop.max_iter,
              updates_per_iter=hop.updates_per_iter, tie=hop.tie, success=hop.success,
              law=hop.noise_law)
    acc = hopfield.evaluate_accuracy(j, stored, **kw)
    acc_off = hopfield.evaluate_accuracy(j_off, stored, **kw)
    fixed = {hopfield.format_pattern(s): hopfield.is_fixed_point(j, s, hop.tie) for s in stored}
    land = hopfield.project_landscape(j, stored)
    seen = [np.asarray(s) for s in res.spins]
    return ExperimentReport(
        seed=config.seed,
        config_hash=config_hash(config),
        mode=hop.mode,
        stored=[hopfield.format_pattern(s) for s in stored],
        u=res.u.tolist(),
        u_expected=hopfield.u_from_patterns(seen).tolist() if seen else [0] * len(pairs),
        dv=dv.tolist(),
        j=j.tolist(),
        j_offline=j_off.tolist(),
        sigma=hop.sigma,
        accuracy=acc.accuracy,
        offline_accuracy=acc_off.accuracy,
        histogram=acc.histogram,
        unconverged=acc.unconverged,
        fixed_points=fixed,
        landscape=land.points.tolist(),
        warnings=list(res.trace.warnings),
        trace=res.trace,
    )


def state_label(s: int) -> str:
    return DomeState(int(s)).name.lower()


__all__ = [
    "StageConfig", "PatternSequence", "pair_index_map", "Metasheet", "ExperimentTrace",
    "run_init", "run_calibration", "run_training", "TrainingResult", "ExperimentReport",
    "run_full_experiment", "build_devices", "TRACE_COLUMNS",
]
