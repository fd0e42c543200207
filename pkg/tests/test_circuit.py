import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metasheet.circuit import (AmplifierConfig, CircuitConfig, ReadoutConfig, RegulatorConfig,
                               amp_output, follower_output, memristor_voltage, regulate,
                               transduce, unit_drive, write_voltage, xor_write_enable)
from metasheet.errors import InputError
from metasheet.mechanics import DomeState, DomeUnit, apply_force, sensor_preset
from metasheet.memristor import MemristorState, VoltagePulse, apply_voltage, init_pulse

AMP = AmplifierConfig()
CHAIN = CircuitConfig()
G, I = DomeState.GROUND, DomeState.INVERTED


def dome(state=G, shape="curved"):
    u = DomeUnit(sensor=sensor_preset(shape))
    if state is I:
        u, _ = apply_force(u, 1e3, now=0.0)
    return u


def test_follower_half_at_reference():
    assert follower_output(AMP, AMP.r_ref) == pytest.approx(0.5 * AMP.v_in1)


def test_follower_limits():
    assert follower_output(AMP, math.inf) == AMP.v_in1
    assert follower_output(AMP, 0.0) == 0.0
    assert follower_output(AMP, 1e12) == pytest.approx(AMP.v_in1, rel=1e-9)
    with pytest.raises(InputError):
        follower_output(AMP, -1.0)


def test_amp_zero_difference_and_gain():
    assert amp_output(AMP, AMP.v_in2) == 0.0
    assert amp_output(AMP, AMP.v_in2 + 0.1) == pytest.approx(2.0)
    assert amp_output(AMP, AMP.v_in2 + 10.0) == AMP.rail
    assert amp_output(AMP, AMP.v_in2 - 10.0) == -AMP.rail


def test_amp_requires_matched_resistors():
    with pytest.raises(InputError):
        AmplifierConfig(r3=200.0)


def test_regulator_gate():
    reg = RegulatorConfig()
    assert regulate(reg, 0.0) == 0.0
    assert regulate(reg, reg.threshold) == reg.out_amplitude
    assert regulate(reg, 11.7) == reg.out_amplitude
    assert regulate(reg, math.nextafter(reg.threshold, 0)) == 0.0


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=50))
def test_regulator_two_valued(vs):
    reg = RegulatorConfig()
    assert {regulate(reg, v) for v in vs} <= {0.0, reg.out_amplitude}


def test_divider():
    ro = ReadoutConfig()
    assert memristor_voltage(ro, 3.0, ro.r_series) == pytest.approx(1.5)
    assert memristor_voltage(ro, 0.0, 1234.0) == 0.0


@given(st.floats(1.0, 1e5), st.floats(1.0, 1e5), st.floats(0.1, 10.0))
def test_divider_increasing_in_m(m1, m2, v):
    ro = ReadoutConfig()
    if m1 < m2:
        assert memristor_voltage(ro, v, m1) < memristor_voltage(ro, v, m2)


def test_smaller_series_resistor_resolves_write_steps_better():
    # per-pulse drop in the read voltage, device programmed through each resistor
    drops = {}
    for rs in (500.0, 2000.0):
        ro = ReadoutConfig(r_series=rs)
        s = init_pulse(MemristorState(), r_series=rs)
        before = memristor_voltage(ro, ro.read_amplitude, s.memristance)
        s = apply_voltage(s, 4.3, 5.0, r_series=rs)
        drops[rs] = before - memristor_voltage(ro, ro.read_amplitude, s.memristance)
    assert drops[500.0] > drops[2000.0] > 0


def test_xor():
    assert xor_write_enable(G, I) and xor_write_enable(I, G)
    assert not xor_write_enable(G, G)
    assert not xor_write_enable(I, I)


def test_curved_sensor_crosses_regulator_threshold_linear_does_not():
    assert unit_drive(dome(I, "curved"), CHAIN) == CHAIN.regulator.out_amplitude
    assert unit_drive(dome(I, "linear"), CHAIN) == 0.0
    assert unit_drive(dome(G), CHAIN) == 0.0


def test_spike_is_debounced_by_default():
    u = dome(G)
    u, _ = apply_force(u, 1e3, now=10.0)
    assert unit_drive(u, CHAIN, now=10.1) == CHAIN.regulator.out_amplitude  # steady inverted level
    g = replace(u, sensor=sensor_preset("linear"))
    assert unit_drive(g, CHAIN, now=10.1) == 0.0
    undebounced = replace(CHAIN, debounce=0.0)
    assert unit_drive(g, undebounced, now=10.1) == CHAIN.regulator.out_amplitude


def test_transduce_single_unit():
    t = np.arange(0.0, 30.0, 0.5)
    supply = VoltagePulse(5.0, 5.0, 10.0)
    assert not np.any(transduce(dome(G), t, supply, CHAIN))
    w = transduce(dome(I), t, supply, CHAIN)
    assert np.array_equal(w > 0, supply.active(t))
    assert set(np.unique(w)) == {0.0, CHAIN.regulator.out_amplitude}


def test_transduce_pair():
    t = np.arange(0.0, 20.0, 1.0)
    supply = VoltagePulse(5.0, 5.0, 10.0)
    assert not np.any(transduce((dome(G), dome(G)), t, supply, CHAIN))
    assert not np.any(transduce((dome(I), dome(I)), t, supply, CHAIN))
    w = transduce((dome(G), dome(I)), t, supply, CHAIN)
    assert np.array_equal(w > 0, supply.active(t))


def test_chain_is_memoryless():
    t = np.array([3.0, 14.0, 3.0, 14.0])
    supply = VoltagePulse(5.0, 5.0, 10.0)
    w = transduce(dome(I), t, supply, CHAIN)
    assert w[0] == w[2] and w[1] == w[3]


@pytest.mark.parametrize("state", [G, I])
@pytest.mark.parametrize("on", [False, True])
def test_truth_table_single_unit(state, on):
    m = init_pulse(MemristorState())
    v = write_voltage(dome(state), on, CHAIN)
    after = apply_voltage(m, v, 5.0, r_series=CHAIN.readout.r_series) if v else m
    assert (after.memristance < m.memristance) == (state is I and on)


@pytest.mark.parametrize("a", [G, I])
@pytest.mark.parametrize("b", [G, I])
@pytest.mark.parametrize("on", [False, True])
def test_truth_table_pair(a, b, on):
    v = write_voltage((dome(a), dome(b)), on, CHAIN)
    assert (v > 0) == (on and a is not b)
