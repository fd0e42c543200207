import numpy as np
import pytest

from metasheet.config import load_config
from metasheet.errors import CalibrationError, InputError
from metasheet.hopfield import u_from_patterns
from metasheet.memristor import MemristorParams, MemristorState
from metasheet.protocol import (ExperimentReport, ExperimentTrace, Metasheet, PatternSequence,
                                StageConfig, build_devices, pair_index_map, run_calibration,
                                run_full_experiment, run_init, run_training)

STAGE = StageConfig()


def fresh_devices(count=6, params=None, seed=0):
    devices, rngs = build_devices(params or MemristorParams(), count, np.random.SeedSequence(seed))
    return devices, rngs


def prepared(count=6, params=None, seed=0):
    devices, rngs = fresh_devices(count, params, seed)
    trace = ExperimentTrace(count)
    devices = run_init(devices, STAGE, 500.0, trace, rngs)
    dv, devices = run_calibration(devices, STAGE, 500.0, trace, rngs)
    return devices, rngs, dv, trace


def train(spins, params=None, seed=0, m=2, n=2, reset_between=True):
    devices, rngs, dv, trace = prepared(len(pair_index_map(m, n)), params, seed)
    sheet = Metasheet.uniform(m, n)
    seq = PatternSequence.from_spins(spins, sheet.thresholds, 1.2, reset_between)
    return run_training(sheet, devices, seq, STAGE, dv, None, trace, rngs)


def test_pair_index_map():
    assert pair_index_map(2, 2) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert pair_index_map(1, 2) == [(0, 1)]
    assert len(pair_index_map(3, 3)) == 36
    with pytest.raises(InputError):
        pair_index_map(1, 1)


def test_calibration_uniform_devices():
    _, _, dv, _ = prepared()
    assert np.all(dv > 0)
    assert np.ptp(dv) / dv.mean() < 0.01


def test_calibration_fails_on_saturated_device():
    devices, _ = fresh_devices()
    devices[3] = MemristorState.at_fraction(1.0, devices[3].params)
    with pytest.raises(CalibrationError) as exc:
        run_calibration(devices, STAGE)
    assert exc.value.device == 3


def test_empty_sequence_reads_identical():
    res = train([])
    assert np.all(res.u == 0)
    assert np.array_equal(res.v0, res.vf)


def test_random_sequences_recover_counts():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = int(rng.integers(1, 7))
        spins = rng.choice([-1, 1], size=(p, 4))
        res = train(spins)
        assert np.array_equal(res.u, u_from_patterns(spins)), spins


def test_order_invariance(derived):
    a = train(derived)
    b = train(derived[::-1])
    assert np.array_equal(a.u, b.u)
    assert tuple(a.u) == (1, 2, 3, 3, 2, 1)


def test_training_sees_requested_states(derived):
    res = train(derived)
    assert np.array_equal(np.array(res.spins), derived)


def test_without_reset_states_accumulate():
    res = train([[1, -1, 1, 1], [1, 1, -1, 1]], reset_between=False)
    assert tuple(res.spins[1]) == (1, -1, -1, 1)


def test_memristance_monotone_during_training(derived):
    res = train(derived)
    for d in range(6):
        m = res.trace.series(d)[:, 3]
        assert np.all(np.diff(m) <= 0)


def test_init_marker_precedes_writes(derived):
    res = train(derived)
    for d in range(6):
        markers = [r[4] for r in res.trace.records[d]]
        assert markers.count("init") == 1
        first_write = min(i for i, mk in enumerate(markers) if mk in ("cal_write", "write"))
        assert markers.index("init") < first_write


def test_trace_clock_monotone(derived):
    res = train(derived)
    for d in range(6):
        t = res.trace.series(d)[:, 0]
        assert np.all(np.diff(t) >= 0)


def test_mismatched_device_count():
    devices, _ = fresh_devices(5)
    with pytest.raises(InputError):
        run_training(Metasheet.uniform(2, 2), devices, PatternSequence(()), STAGE, np.ones(5))


def test_force_map_length_checked():
    with pytest.raises(InputError):
        Metasheet.uniform(2, 2).apply_forces([30.0, 0.0])


def test_cycle_noise_can_corrupt_counts(derived):
    noisy = MemristorParams(cycle_sigma=0.6)
    wrong = sum(not np.array_equal(train(derived, noisy, seed=s).u, (1, 2, 3, 3, 2, 1))
                for s in range(10))
    assert wrong > 0


def test_report_round_trip():
    cfg = load_config(overrides={"hopfield.trials": 200})
    report = run_full_experiment(cfg)
    back = ExperimentReport.from_dict(report.to_dict())
    assert back == report
    assert report.u == report.u_expected == [1, 2, 3, 3, 2, 1]
