"""Threshold-gated non-volatile memristor model and device characterization.

The internal state is the accumulated programming dose ``D >= 0``. The
programmed fraction ``x = X(D)`` combines a fast knee (most of the first SET
happens almost immediately) with a slow logistic component, which gives the
nonlinear-then-linear conductance growth seen under repeated pulses::

    X(D) = a (1 - exp(-D / d_k)) + (1 - a) y(D),   y logistic from y0 to 1
    M    = HRS - x (HRS - LRS)

The dose only moves while the device voltage is outside (v_reset, v_set):

    dD/dt = +alpha   (v - v_set)^beta          v >= v_set
    dD/dt = -alpha_r (v_reset - v)^beta_r      v <= v_reset

so ``dx/dt = rate(v) * X'(D)`` and ``X'`` plays the role of the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import kernels
from .errors import ExtractionError, InputError

READ_CONDUCTANCE = 0.033e-3  # S, reference line for the threshold estimate


@dataclass(frozen=True)
class MemristorParams:
    hrs: float = 15200.0
    lrs: float = 1310.0
    v_set: float = 3.0
    v_reset: float = -4.0
    alpha: float = 0.016
    beta: float = 11.0
    device_sigma: float = 0.0
    cycle_sigma: float = 0.0
    alpha_reset: float | None = None  # None: same as alpha
    beta_reset: float | None = None
    knee_fraction: float = 0.55
    knee_dose: float = 1e-14
    linear_dose: float = 1.0
    seed_fraction: float = 0.2
    fatigue: float = 0.0  # relative LRS rise per sweep cycle
    step: float = 0.01  # s, integration step ceiling

    def __post_init__(self):
        if not self.hrs > self.lrs > 0:
            raise InputError("need hrs > lrs > 0")
        if not self.v_set > 0 > self.v_reset:
            raise InputError("need v_set > 0 > v_reset")
        if self.alpha < 0 or (self.alpha_reset is not None and self.alpha_reset < 0):
            raise InputError("drift rates must be non-negative")
        if self.beta < 1 or (self.beta_reset is not None and self.beta_reset < 1):
            raise InputError("overdrive exponents must be >= 1")
        if self.device_sigma < 0 or self.cycle_sigma < 0 or self.fatigue < 0:
            raise InputError("sigmas and fatigue must be non-negative")
        if not 0 <= self.knee_fraction < 1:
            raise InputError("knee_fraction must lie in [0, 1)")
        if not 0 < self.seed_fraction < 1:
            raise InputError("seed_fraction must lie in (0, 1)")
        if not (self.knee_dose > 0 and self.linear_dose > 0 and self.step > 0):
            raise InputError("knee_dose, linear_dose and step must be positive")

    def vector(self) -> np.ndarray:
        """Packed layout consumed by the kernels."""
        a_r = self.alpha if self.alpha_reset is None else self.alpha_reset
        b_r = self.beta if self.beta_reset is None else self.beta_reset
        return np.array(
            [self.hrs, self.lrs, self.v_set, self.v_reset, self.alpha, self.beta, a_r, b_r,
             self.knee_fraction, self.knee_dose, self.linear_dose, self.seed_fraction],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class MemristorState:
    params: MemristorParams = field(default_factory=MemristorParams)
    dose: float = 0.0

    @property
    def x(self) -> float:
        return kernels.programmed_fraction(self.dose, self.params.vector())

    @property
    def memristance(self) -> float:
        return kernels.memristance(self.dose, self.params.vector())

    @classmethod
    def at_fraction(cls, x: float, params: MemristorParams | None = None) -> "MemristorState":
        params = params or MemristorParams()
        return cls(params, dose_for_fraction(x, params))


def dose_for_fraction(x: float, params: MemristorParams) -> float:
    """Smallest dose whose programmed fraction reaches ``x`` (bisection on X)."""
    if not 0.0 <= x <= 1.0:
        raise InputError(f"x must lie in [0, 1], got {x}")
    prm = params.vector()
    if x == 0.0:
        return 0.0
    lo, hi = 0.0, params.linear_dose
    while kernels.programmed_fraction(hi, prm) < x:
        hi *= 2.0
        if hi > 1e6 * params.linear_dose:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if kernels.programmed_fraction(mid, prm) < x:
            lo = mid
        else:
            hi = mid
    return hi


def window(x: float, params: MemristorParams) -> float:
    """dX/dD at the dose holding fraction ``x``; scales the drift, vanishes at x = 1."""
    d = dose_for_fraction(x, params)
    a, y0 = params.knee_fraction, params.seed_fraction
    c = (1.0 + y0) / params.linear_dose
    knee = a / params.knee_dose * math.exp(-d / params.knee_dose)
    arg = min(d * c, 700.0)
    e = y0 * math.exp(arg)
    logistic = (1.0 - a) * c * e * (1.0 + y0) / (1.0 + e) ** 2
    return knee + logistic


def dose_rate(v: float, params: MemristorParams) -> float:
    """Instantaneous dD/dt at device voltage ``v``."""
    p = params.vector()
    if v >= p[2]:
        return p[4] * math.pow(v - p[2], p[5])
    if v <= p[3]:
        return -p[6] * math.pow(p[3] - v, p[7])
    return 0.0


def _cycle_gain(params: MemristorParams, rng) -> float:
    if params.cycle_sigma == 0:
        return 1.0
    if rng is None:
        raise InputError("cycle_sigma > 0 needs an rng")
    return max(0.0, 1.0 + params.cycle_sigma * rng.standard_normal())


def _steps(dt: float, params: MemristorParams) -> tuple[int, float]:
    n = max(1, math.ceil(dt / params.step - 1e-9))
    return n, dt / n


def apply_voltage(state: MemristorState, v: float, dt: float, rng=None,
                  r_series: float = 0.0) -> MemristorState:
    """Hold ``v`` across the device (or across device + ``r_series``) for ``dt`` s."""
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt}")
    p = state.params
    if p.v_reset < v < p.v_set:
        # the divider only lowers |v|, so nothing can move
        return state
    gain = _cycle_gain(p, rng)
    n, h = _steps(dt, p)
    volts = np.full(n, float(v))
    dose = kernels.integrate_dose(state.dose, volts, h, float(r_series), p.vector(), gain)
    if dose == state.dose:
        return state
    return replace(state, dose=dose)


@dataclass(frozen=True)
class VoltagePulse:
    amplitude: float
    width: float
    period: float | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise InputError("pulse width must be positive")
        if self.period is None:
            object.__setattr__(self, "period", self.width)
        if self.period < self.width:
            raise InputError("pulse period must be at least the width")

    def active(self, t):
        """Whether the supply is high at time ``t`` (pulse train starting at 0)."""
        t = np.asarray(t, dtype=float)
        return (t >= 0) & (np.mod(t, self.period) < self.width)


def divided_voltage(v: float, m: float, r_series: float) -> float:
    return v * m / (m + r_series)


def apply_pulse_train(state: MemristorState, pulse: VoltagePulse, n: int, read_v: float = 1.5,
                      r_s: float = 500.0, rng=None):
    """Fire ``n`` pulses through ``r_s``; read after each.

    Returns ``(rows, final_state)`` with one ``(memristance, read_voltage)`` per pulse.
    """
    if n < 1:
        raise InputError("pulse train needs n >= 1")
    rows = []
    for _ in range(n):
        state = apply_voltage(state, pulse.amplitude, pulse.width, rng, r_s)
        m = state.memristance
        rows.append((m, divided_voltage(read_v, m, r_s)))
    return rows, state


def init_pulse(state: MemristorState, amplitude: float = 4.3, width: float = 20.0,
               r_series: float = 500.0, rng=None) -> MemristorState:
    """Pre-set a fresh device into the region where pulses act linearly.

    Applied through the readout resistor, as the device sits in the same
    divider during every later write.
    """
    return apply_voltage(state, amplitude, width, rng, r_series)


LINEAR_BAND = (0.55, 0.9)


@dataclass
class IvTrace:
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    m: np.ndarray
    samples_per_cycle: int
    warning: str | None = None

    def rows(self):
        return zip(self.t.tolist(), self.v.tolist(), self.i.tolist(), self.m.tolist())


def iv_sweep(state: MemristorState, amplitude: float = 5.0, freq: float = 0.1, cycles: int = 1,
             samples_per_cycle: int = 2000, rng=None) -> tuple[IvTrace, MemristorState]:
    """Sinusoidal sweep. The state moves with the mid-step voltage; current is
    read at the end of each step as ``v / M`` so ``i = 0`` wherever ``v = 0``."""
    if cycles < 1 or samples_per_cycle < 4 or samples_per_cycle % 2:
        raise InputError("need cycles >= 1 and an even samples_per_cycle >= 4")
    p = state.params
    warning = None
    if amplitude <= p.v_set:
        warning = f"amplitude {amplitude} V does not exceed v_set {p.v_set} V; no switching expected"
    spc = samples_per_cycle
    h = 1.0 / (freq * spc)
    k = np.arange(spc)
    mid_v = amplitude * np.sin(2 * np.pi * (k + 0.5) / spc)
    end_v = amplitude * np.sin(2 * np.pi * (k + 1) / spc)
    end_v[[spc // 2 - 1, spc - 1]] = 0.0  # exact zero crossings

    ts, vs, ms = [], [], []
    dose = state.dose
    doses = np.empty(spc)
    for c in range(cycles):
        prm = p.vector()
        if p.fatigue:
            prm[1] = min(p.lrs * (1.0 + p.fatigue) ** c, 0.5 * (p.hrs + p.lrs))
        dose = kernels.integrate_dose(dose, mid_v, h, 0.0, prm, _cycle_gain(p, rng), doses)
        ms.append(np.array([kernels.memristance(d, prm) for d in doses]))
        ts.append((c * spc + k + 1) * h)
        vs.append(end_v.copy())
    t = np.concatenate(ts)
    v = np.concatenate(vs)
    m = np.concatenate(ms)
    trace = IvTrace(t=t, v=v, i=v / m, m=m, samples_per_cycle=spc, warning=warning)
    return trace, replace(state, dose=dose)


def _slope_through_origin(v, i):
    return float(np.dot(v, i) / np.dot(v, v))


def estimate_vth_hrs_lrs(trace: IvTrace, conductance: float = READ_CONDUCTANCE,
                         steep_factor: float = 10.0) -> tuple[float, float, float]:
    """Threshold voltage, HRS and LRS from the first positive half-cycle.

    HRS is the origin slope of the outbound branch before conduction departs
    from ohmic. The steep SET segment is the first run of local slopes above
    ``steep_factor`` times the HRS conductance; a line through it meets the
    ``conductance`` reference line at the threshold. LRS is the origin slope
    of the return branch below the switching onset, where the state is frozen.
    """
    spc = trace.samples_per_cycle
    q = spc // 4
    v_out, i_out = trace.v[:q], trace.i[:q]
    v_back, i_back = trace.v[q:spc // 2], trace.i[q:spc // 2]
    pos = v_out > 0
    v_out, i_out = v_out[pos], i_out[pos]
    if v_out.size < 8:
        raise ExtractionError("trace too short for extraction")

    g = i_out / v_out
    g0 = np.median(g[:5])
    moved = np.flatnonzero(g > 1.01 * g0)
    if moved.size == 0:
        raise ExtractionError("no SET transition in trace")
    onset = moved[0]
    if onset < 3:
        raise ExtractionError("switching starts at the first samples; no ohmic HRS branch")
    g_hrs = _slope_through_origin(v_out[:onset], i_out[:onset])

    local = np.diff(i_out) / np.diff(v_out)
    steep = local > steep_factor * g_hrs
    steep[: max(onset - 1, 0)] = False
    idx = np.flatnonzero(steep)
    if idx.size == 0:
        raise ExtractionError("no steep SET branch in trace")
    start = stop = idx[0]
    while stop + 1 < steep.size and steep[stop + 1]:
        stop += 1
    seg = slice(start, stop + 2)
    b, c0 = np.polyfit(v_out[seg], i_out[seg], 1)
    v_th = c0 / (conductance - b)

    frozen = (v_back > 0) & (v_back < 0.9 * v_out[onset])
    if np.count_nonzero(frozen) < 3:
        raise ExtractionError("return branch has no frozen low-voltage samples")
    g_lrs = _slope_through_origin(v_back[frozen], i_back[frozen])
    return float(v_th), 1.0 / g_hrs, 1.0 / g_lrs


def sample_device(params: MemristorParams, rng) -> MemristorParams:
    """Device-to-device spread: HRS, LRS and v_set scaled by independent N(1, sigma)."""
    s = params.device_sigma
    if s == 0:
        return params
    while True:
        f_h, f_l, f_v = 1.0 + s * rng.standard_normal(3)
        hrs, lrs, v_set = params.hrs * f_h, params.lrs * f_l, params.v_set * f_v
        if hrs > lrs > 0 and v_set > 0:
            return replace(params, hrs=hrs, lrs=lrs, v_set=v_set)


def characterize_devices(params: MemristorParams, n: int, seed: int, amplitude: float = 5.0,
                         freq: float = 0.1, samples_per_cycle: int = 2000):
    """Sweep ``n`` sampled devices and extract (v_th, HRS, LRS) for each.

    Returns ``(table, summary)``; ``table`` is an (n, 3) array, ``summary`` maps
    each column to its mean and standard deviation.
    """
    streams = np.random.SeedSequence(seed).spawn(n)
    table = np.empty((n, 3))
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        dev = sample_device(params, rng)
        trace, _ = iv_sweep(MemristorState(dev), amplitude, freq, 1, samples_per_cycle, rng)
        table[k] = estimate_vth_hrs_lrs(trace)
    summary = {
        name: (float(table[:, j].mean()), float(table[:, j].std(ddof=1)) if n > 1 else 0.0)
        for j, name in enumerate(("v_th", "hrs", "lrs"))
    }
    return table, summary
