"""Command-line harness.

    metasheet <command> [--config PATH] [--seed N] [--out DIR] [--mode MODE]

Commands write CSV/JSON artifacts into the output directory and print the
paths they wrote. Exit codes: 0 success, 2 config error, 3 simulation error.
Failures print a JSON object with ``error``, ``message`` and ``field`` to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import hopfield, io
from .config import RunConfig, config_hash, load_config
from .errors import ConfigError, SimulationError
from .mechanics import (DomeUnit, apply_force, calibration_table, sensor_resistance,
                        threshold_force)
from .memristor import (MemristorState, VoltagePulse, apply_pulse_train, estimate_vth_hrs_lrs,
                        init_pulse, iv_sweep)
from .protocol import (TRACE_COLUMNS, ExperimentTrace, Metasheet, PatternSequence, build_devices,
                       pair_index_map, run_calibration, run_full_experiment, run_init,
                       run_training, state_label)


def _stamp(cfg: RunConfig, payload: dict) -> dict:
    payload = dict(payload)
    payload["config_hash"] = config_hash(cfg)
    payload["seed"] = cfg.seed
    return payload


def _emit(paths):
    for p in paths:
        print(p)
    return 0


def cmd_characterize_dome(cfg: RunConfig, out: Path):
    ch = cfg.characterization
    table = calibration_table(cfg.geometry)
    variants = []
    for t in ch.thicknesses:
        k = table.get(t, cfg.geometry.calibration_k)
        variants.append(replace(cfg.geometry, thickness=t, calibration_k=k))
    base_k = table.get(cfg.geometry.thickness, cfg.geometry.calibration_k)
    for h in ch.heights:
        variants.append(replace(cfg.geometry, height=h, calibration_k=base_k))
    rows = []
    thresholds = []
    for g in variants:
        thresholds.append((g.thickness, g.height, g.calibration_k, threshold_force(g)))
        for f in ch.forces:
            unit, _ = apply_force(DomeUnit(g, cfg.sensor), f)
            rows.append((g.thickness, g.height, float(f), state_label(unit.state),
                         sensor_resistance(unit, float("inf"))))
    p1 = io.write_csv(out / "dome_characterization.csv",
                      ("thickness_mm", "height_mm", "force_N", "final_state", "R_ohm"), rows)
    p2 = io.write_csv(out / "dome_thresholds.csv",
                      ("thickness_mm", "height_mm", "calibration_k", "threshold_N"), thresholds)
    return [p1, p2]


def cmd_characterize_memristor(cfg: RunConfig, out: Path, kind: str):
    ch = cfg.characterization
    rng = np.random.default_rng(cfg.seed)
    fresh = MemristorState(cfg.memristor)
    if kind == "sweep":
        trace, _ = iv_sweep(fresh, ch.sweep_amplitude, ch.sweep_freq, ch.sweep_cycles,
                            ch.samples_per_cycle, rng)
        p1 = io.write_csv(out / "iv_sweep.csv", ("t_s", "v_V", "i_A", "M_ohm"), trace.rows())
        v_th, hrs, lrs = estimate_vth_hrs_lrs(trace)
        p2 = io.write_json(out / "iv_extraction.json", _stamp(cfg, {
            "v_th_V": v_th, "hrs_ohm": hrs, "lrs_ohm": lrs, "warning": trace.warning}))
        return [p1, p2]
    r_s = cfg.circuit.readout.r_series
    read_v = cfg.circuit.readout.read_amplitude
    start = init_pulse(fresh, cfg.protocol.stage.init_pulse.amplitude,
                       cfg.protocol.stage.init_pulse.width, r_s, rng)
    rows = []
    for width in ch.pulse_widths:
        m0 = start.memristance
        rows.append((width, 0, m0, read_v * m0 / (m0 + r_s)))
        res, _ = apply_pulse_train(start, VoltagePulse(ch.pulse_amplitude, width), ch.pulse_count,
                                   read_v, r_s, rng)
        rows += [(width, k + 1, m, v) for k, (m, v) in enumerate(res)]
    p = io.write_csv(out / "pulse_staircase.csv",
                     ("width_s", "pulse_index", "M_ohm", "v_read_V"), rows)
    return [p]


def _train(cfg: RunConfig):
    proto = cfg.protocol
    dev_ss, _ = np.random.SeedSequence(cfg.seed).spawn(2)
    sheet = Metasheet.uniform(proto.m, proto.n, cfg.geometry, cfg.sensor)
    devices, rngs = build_devices(cfg.memristor, len(pair_index_map(proto.m, proto.n)), dev_ss)
    trace = ExperimentTrace(len(devices))
    r_s = cfg.circuit.readout.r_series
    devices = run_init(devices, proto.stage, r_s, trace, rngs)
    dv, devices = run_calibration(devices, proto.stage, r_s, trace, rngs)
    spins = proto.ordered_spins()
    seq = PatternSequence.from_spins(spins, sheet.thresholds, proto.force_scale, proto.reset_between)
    res = run_training(sheet, devices, seq, proto.stage, dv, cfg.circuit, trace, rngs)
    j = hopfield.transform_weights(hopfield.assemble_jm(res.u), cfg.hopfield.mode, len(spins))
    return res, dv, j


def _write_traces(out: Path, trace: ExperimentTrace):
    paths = []
    for d, rows in enumerate(trace.records):
        paths.append(io.write_csv(out / f"trace_memristor_{d + 1}.csv", TRACE_COLUMNS, rows))
    return paths


def _weights(cfg: RunConfig):
    """Weights for the stored patterns without running the device protocol."""
    spins = cfg.protocol.ordered_spins()
    u = hopfield.u_from_patterns(spins)
    return hopfield.transform_weights(hopfield.assemble_jm(u), cfg.hopfield.mode, len(spins))


def cmd_train(cfg: RunConfig, out: Path):
    res, dv, j = _train(cfg)
    p = io.write_json(out / "train.json", _stamp(cfg, {
        "mode": cfg.hopfield.mode, "u": res.u, "dv": dv, "v0": res.v0, "vf": res.vf, "j": j,
        "warnings": res.trace.warnings}))
    return [p] + _write_traces(out, res.trace)


def cmd_retrieve(cfg: RunConfig, out: Path, pattern: str):
    try:
        s = hopfield.parse_pattern(pattern)
    except ValueError as exc:
        raise ConfigError("pattern", str(exc)) from None
    j = _weights(cfg)
    if s.size != len(j):
        raise ConfigError("pattern", f"needs {len(j)} entries, got {s.size}")
    hop = cfg.hopfield
    r = hopfield.async_retrieve(j, s, hop.max_iter, hop.updates_per_iter,
                                np.random.default_rng(cfg.seed), hop.tie)
    p = io.write_json(out / "retrieve.json", _stamp(cfg, {
        "start": pattern, "result": hopfield.format_pattern(r.state),
        "iterations": r.iterations, "converged": r.converged,
        "energy_start": hopfield.energy(j, s), "energy_result": hopfield.energy(j, r.state)}))
    return [p]


def cmd_evaluate(cfg: RunConfig, out: Path):
    hop = cfg.hopfield
    stored = cfg.protocol.stored_spins()
    acc = hopfield.evaluate_accuracy(_weights(cfg), stored, hop.trials, hop.sigma, cfg.seed,
                                     hop.max_iter, hop.updates_per_iter, hop.tie, hop.success,
                                     hop.noise_law)
    p1 = io.write_json(out / "evaluate.json", _stamp(cfg, {
        "accuracy": acc.accuracy, "trials": acc.trials, "failures": acc.failures,
        "unconverged": acc.unconverged, "sigma": hop.sigma, "mode": hop.mode,
        "histogram": acc.histogram}))
    p2 = io.write_csv(out / "error_histogram.csv", ("bit_errors", "probability"),
                      sorted(acc.histogram.items()))
    return [p1, p2]


def cmd_landscape(cfg: RunConfig, out: Path):
    land = hopfield.project_landscape(_weights(cfg), cfg.protocol.stored_spins(),
                                      rng=np.random.default_rng(cfg.seed))
    rows = [(hopfield.format_pattern(s), *pt) for s, pt in zip(land.states, land.points.tolist())]
    p1 = io.write_csv(out / "landscape.csv", ("state", "v1", "v2", "energy"), rows)
    p2 = io.write_json(out / "landscape_axes.json", _stamp(cfg, {"axes": land.axes}))
    return [p1, p2]


def cmd_run_experiment(cfg: RunConfig, out: Path):
    report = run_full_experiment(cfg)
    p1 = io.write_json(out / "report.json", report.to_dict())
    p2 = io.write_csv(out / "error_histogram.csv", ("bit_errors", "probability"),
                      sorted(report.histogram.items()))
    p3 = io.write_csv(out / "landscape.csv", ("v1", "v2", "energy"), report.landscape)
    return [p1, p2, p3] + _write_traces(out, report.trace)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (default: bundled reproduction config)")
    common.add_argument("--seed", type=int, help="root seed, overrides the config")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--mode", choices=("verbatim", "hebbian-equiv"),
                        help="weight transform, overrides hopfield.mode")

    parser = argparse.ArgumentParser(prog="metasheet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("characterize-dome", parents=[common], help="threshold sweep over forces")
    mem = sub.add_parser("characterize-memristor", parents=[common],
                         help="i-v sweep or pulse staircase")
    mem.add_argument("kind", choices=("sweep", "pulses"))
    sub.add_parser("train", parents=[common], help="run INIT, calibration and training")
    ret = sub.add_parser("retrieve", parents=[common], help="retrieve from a start pattern")
    ret.add_argument("pattern", help="start state as a +/- string, e.g. +-+-")
    sub.add_parser("evaluate", parents=[common], help="accuracy on corrupted patterns")
    sub.add_parser("landscape", parents=[common], help="2-D projection of the energy landscape")
    sub.add_parser("run-experiment", parents=[common], help="full pipeline and report")
    return parser


def _fail(code: int, exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc),
               "field": getattr(exc, "field", None)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.mode is not None:
        overrides["hopfield.mode"] = args.mode.replace("-", "_")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        return _fail(2, exc)
    out = Path(cfg.output_dir)
    try:
        if args.command == "characterize-dome":
            paths = cmd_characterize_dome(cfg, out)
        elif args.command == "characterize-memristor":
            paths = cmd_characterize_memristor(cfg, out, args.kind)
        elif args.command == "train":
            paths = cmd_train(cfg, out)
        elif args.command == "retrieve":
            paths = cmd_retrieve(cfg, out, args.pattern)
        elif args.command == "evaluate":
            paths = cmd_evaluate(cfg, out)
        elif args.command == "landscape":
            paths = cmd_landscape(cfg, out)
        else:
            paths = cmd_run_experiment(cfg, out)
    except ConfigError as exc:
        return _fail(2, exc)
    except (SimulationError, ValueError) as exc:
        return _fail(3, exc)
    return _emit(paths)


if __name__ == "__main__":
    sys.exit(main())
