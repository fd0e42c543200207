"""Run configuration: one JSON document with a section per module.

Every section is optional; missing entries take the library defaults. The
document is validated completely before any simulation runs, and errors name
the offending field as ``section.key``.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .circuit import AmplifierConfig, CircuitConfig, ReadoutConfig, RegulatorConfig
from .errors import ConfigError
from .hopfield import MODES, NOISE_LAWS, SUCCESS_RULES, TIE_RULES, as_patterns, parse_pattern
from .mechanics import THICKNESS_BRACKETS, DomeGeometry, SensorSpec, calibration_table, sensor_preset
from .memristor import MemristorParams, VoltagePulse
from .protocol import StageConfig

SECTIONS = ("geometry", "sensor", "memristor", "circuit", "hopfield", "protocol",
            "characterization", "seed", "output_dir")

DEFAULT_PATTERNS = ["++++", "++--", "--++", "+-+-"]


@dataclass(frozen=True)
class HopfieldSettings:
    mode: str = "hebbian_equiv"
    sigma: float = 0.45
    trials: int = 3000
    max_iter: int = 20
    updates_per_iter: int = 4
    tie: str = "hold"
    success: str = "source"
    noise_law: str = "normal"

    def __post_init__(self):
        object.__setattr__(self, "mode", self.mode.replace("-", "_"))
        if self.mode not in MODES:
            raise ConfigError("hopfield.mode", f"must be one of {MODES}")
        if self.tie not in TIE_RULES:
            raise ConfigError("hopfield.tie", f"must be one of {TIE_RULES}")
        if self.success not in SUCCESS_RULES:
            raise ConfigError("hopfield.success", f"must be one of {SUCCESS_RULES}")
        if self.noise_law not in NOISE_LAWS:
            raise ConfigError("hopfield.noise_law", f"must be one of {NOISE_LAWS}")
        if not self.sigma >= 0:
            raise ConfigError("hopfield.sigma", "must be non-negative")
        for name in ("trials", "max_iter", "updates_per_iter"):
            if not (isinstance(getattr(self, name), int) and getattr(self, name) >= 1):
                raise ConfigError(f"hopfield.{name}", "must be a positive integer")


@dataclass(frozen=True)
class ProtocolSettings:
    m: int = 2
    n: int = 2
    patterns: tuple = tuple(DEFAULT_PATTERNS)
    order: tuple | None = None
    reset_between: bool = True
    force_scale: float = 1.2
    stage: StageConfig = StageConfig()

    def spins(self) -> np.ndarray:
        return np.array([parse_pattern(p) for p in self.patterns], dtype=np.int64).reshape(
            len(self.patterns), self.m * self.n)

    def ordered_spins(self) -> np.ndarray:
        s = self.spins()
        return s if self.order is None else s[list(self.order)]

    def stored_spins(self) -> np.ndarray:
        """Distinct patterns in first-seen order."""
        out = []
        for p in self.spins().tolist():
            if p not in out:
                out.append(p)
        return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class CharacterizationSettings:
    forces: tuple = tuple(float(f) for f in range(14, 25))
    thicknesses: tuple = tuple(THICKNESS_BRACKETS)
    heights: tuple = (6.0, 7.0, 8.0)
    sweep_amplitude: float = 5.0
    sweep_freq: float = 0.1
    sweep_cycles: int = 1
    samples_per_cycle: int = 2000
    pulse_widths: tuple = (1.0, 2.0, 5.0)
    pulse_amplitude: float = 4.3
    pulse_count: int = 10


@dataclass(frozen=True)
class RunConfig:
    geometry: DomeGeometry
    sensor: SensorSpec
    memristor: MemristorParams
    circuit: CircuitConfig
    hopfield: HopfieldSettings
    protocol: ProtocolSettings
    characterization: CharacterizationSettings
    seed: int
    output_dir: str
    document: dict  # normalized source document, used for hashing


def _build(cls, section: str, values, convert=None):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(section, "must be an object")
    known = {f.name for f in fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown field")
    kwargs = dict(values)
    if convert:
        for key, fn in convert.items():
            if key in kwargs and kwargs[key] is not None:
                try:
                    kwargs[key] = fn(kwargs[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{section}.{key}", str(exc)) from None
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def _pulse(field_name):
    def conv(v):
        if not isinstance(v, dict):
            raise ValueError("pulse must be an object with amplitude and width")
        try:
            return VoltagePulse(**v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(field_name, str(exc)) from None
    return conv


def _geometry(values) -> DomeGeometry:
    values = dict(values or {})
    k = values.get("calibration_k", "auto")
    if k == "auto":
        values.pop("calibration_k", None)
        base = _build(DomeGeometry, "geometry", values)
        table = calibration_table(base)
        if base.thickness not in table:
            raise ConfigError("geometry.calibration_k",
                              f"no bracket for thickness {base.thickness}; give a number")
        values["calibration_k"] = table[base.thickness]
    return _build(DomeGeometry, "geometry", values)


def _sensor(values) -> SensorSpec:
    values = dict(values or {})
    preset = sensor_preset(values.pop("shape", "curved"))
    merged = {f.name: getattr(preset, f.name) for f in fields(SensorSpec)}
    for key in values:
        if key not in merged:
            raise ConfigError(f"sensor.{key}", "unknown field")
    merged.update(values)
    if merged.get("spike_value") is None:
        merged["spike_value"] = float("inf")
    return _build(SensorSpec, "sensor", merged)


def _circuit(values) -> CircuitConfig:
    values = dict(values or {})
    for key in values:
        if key not in ("amplifier", "regulator", "readout", "debounce"):
            raise ConfigError(f"circuit.{key}", "unknown field")
    return CircuitConfig(
        amplifier=_build(AmplifierConfig, "circuit.amplifier", values.get("amplifier")),
        regulator=_build(RegulatorConfig, "circuit.regulator", values.get("regulator")),
        readout=_build(ReadoutConfig, "circuit.readout", values.get("readout")),
        debounce=values.get("debounce"),
    )


def _protocol(values) -> ProtocolSettings:
    values = dict(values or {})
    stage_keys = {f.name for f in fields(StageConfig)}
    stage_vals = {k: values.pop(k) for k in list(values) if k in stage_keys}
    stage = _build(StageConfig, "protocol", stage_vals,
                   {k: _pulse(f"protocol.{k}") for k in ("init_pulse", "write_pulse", "read_pulse")})
    values["stage"] = stage
    for key in ("patterns", "order"):
        if values.get(key) is not None:
            values[key] = tuple(values[key])
    settings = _build(ProtocolSettings, "protocol", values)
    if settings.m < 1 or settings.n < 1 or settings.m * settings.n < 2:
        raise ConfigError("protocol.m", "need m, n >= 1 and m * n >= 2")
    try:
        spins = settings.spins()
        if len(spins):
            as_patterns(spins)
    except ValueError as exc:
        raise ConfigError("protocol.patterns", str(exc)) from None
    if settings.order is not None:
        if sorted(settings.order) != list(range(len(settings.patterns))):
            raise ConfigError("protocol.order", "must be a permutation of pattern indices")
    return settings


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    for key in doc:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    out = doc.get("output_dir", ".")
    if not isinstance(out, str):
        raise ConfigError("output_dir", "must be a string")
    return RunConfig(
        geometry=_geometry(doc.get("geometry")),
        sensor=_sensor(doc.get("sensor")),
        memristor=_build(MemristorParams, "memristor", doc.get("memristor")),
        circuit=_circuit(doc.get("circuit")),
        hopfield=_build(HopfieldSettings, "hopfield", doc.get("hopfield")),
        protocol=_protocol(doc.get("protocol")),
        characterization=_build(CharacterizationSettings, "characterization",
                                doc.get("characterization"),
                                {k: tuple for k in ("forces", "thicknesses", "heights",
                                                    "pulse_widths")}),
        seed=seed,
        output_dir=out,
        document=copy.deepcopy(doc),
    )


def bundled_config_path():
    return resources.files("metasheet") / "data" / "default_run.json"


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a config file (bundled reproduction config when ``path`` is None).

    ``overrides`` maps dotted names to values and wins over the file.
    """
    if path is None:
        text = bundled_config_path().read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    for dotted, value in (overrides or {}).items():
        node = doc
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return config_from_dict(doc)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: RunConfig) -> str:
    """Digest of the source document with output_dir left out (it does not affect results)."""
    doc = {k: v for k, v in config.document.items() if k != "output_dir"}
    doc["seed"] = config.seed
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:16]
