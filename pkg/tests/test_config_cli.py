import json

import pytest

from metasheet import cli, io
from metasheet.config import config_from_dict, config_hash, load_config
from metasheet.errors import ConfigError


@pytest.mark.parametrize("doc, field", [
    ({"hopfield": {"sigma": -0.1}}, "hopfield.sigma"),
    ({"hopfield": {"tie": "coin"}}, "hopfield.tie"),
    ({"hopfield": {"trials": 0}}, "hopfield.trials"),
    ({"geometry": {"colour": 1}}, "geometry.colour"),
    ({"sensor": {"bogus": 1}}, "sensor.bogus"),
    ({"protocol": {"order": [0, 0, 1, 2]}}, "protocol.order"),
    ({"protocol": {"patterns": ["++0+"]}}, "protocol.patterns"),
    ({"protocol": {"write_pulse": {"amplitude": 4.3}}}, "protocol.write_pulse"),
    ({"seed": -1}, "seed"),
    ({"mystery": {}}, "mystery"),
    ({"geometry": {"thickness": 0.85}}, "geometry.calibration_k"),
])
def test_invalid_configs_name_field(doc, field):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert exc.value.field == field


def test_bundled_defaults():
    cfg = load_config()
    assert cfg.hopfield.sigma == 0.45 and cfg.hopfield.mode == "hebbian_equiv"
    assert cfg.protocol.m == cfg.protocol.n == 2
    assert cfg.sensor.shape.value == "curved"


def test_overrides_win_and_hash_ignores_output_dir():
    a = load_config(overrides={"seed": 5, "output_dir": "x"})
    b = load_config(overrides={"seed": 5, "output_dir": "y"})
    c = load_config(overrides={"seed": 6})
    assert a.seed == 5
    assert config_hash(a) == config_hash(b) != config_hash(c)


def test_missing_config_file(tmp_path, capsys):
    rc = cli.main(["evaluate", "--config", str(tmp_path / "none.json")])
    assert rc == 2
    assert json.loads(capsys.readouterr().err)["field"] == "config"


def test_bad_pattern_exit_code(tmp_path, capsys):
    rc = cli.main(["retrieve", "+-x-", "--out", str(tmp_path)])
    assert rc == 2
    assert json.loads(capsys.readouterr().err)["field"] == "pattern"


def test_bad_config_value_exit_code(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"hopfield": {"sigma": -1}}))
    assert cli.main(["evaluate", "--config", str(path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["field"] == "hopfield.sigma"


def test_simulation_error_exit_code(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"memristor": {"alpha": 0.0}, "output_dir": str(tmp_path)}))
    assert cli.main(["train", "--config", str(path)]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "CalibrationError"


def test_retrieve_outputs(tmp_path, capsys):
    assert cli.main(["retrieve", "++-+", "--out", str(tmp_path), "--seed", "3"]) == 0
    data = io.read_json(tmp_path / "retrieve.json")
    assert data["result"] == "++--" and data["seed"] == 3
    assert data["config_hash"] == config_hash(load_config(overrides={"seed": 3}))
    assert data["energy_result"] <= data["energy_start"]


def test_mode_flag(tmp_path):
    assert cli.main(["train", "--out", str(tmp_path), "--mode", "verbatim"]) == 0
    data = io.read_json(tmp_path / "train.json")
    assert data["mode"] == "verbatim" and data["j"][0][0] == 3


@pytest.mark.parametrize("argv, files", [
    (["characterize-dome"], {"dome_characterization.csv": "thickness_mm",
                             "dome_thresholds.csv": "thickness_mm"}),
    (["characterize-memristor", "sweep"], {"iv_sweep.csv": "t_s"}),
    (["characterize-memristor", "pulses"], {"pulse_staircase.csv": "width_s"}),
    (["train"], {"trace_memristor_1.csv": "t_s"}),
    (["evaluate"], {"error_histogram.csv": "bit_errors"}),
    (["landscape"], {"landscape.csv": "state"}),
])
def test_csv_headers(tmp_path, argv, files):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"hopfield": {"trials": 300}, "seed": 1}))
    assert cli.main(argv + ["--config", str(path), "--out", str(tmp_path)]) == 0
    for name, first in files.items():
        header, rows = io.read_csv(tmp_path / name)
        assert header[0] == first and rows


def test_dome_characterization_content(tmp_path):
    assert cli.main(["characterize-dome", "--out", str(tmp_path)]) == 0
    _, rows = io.read_csv(tmp_path / "dome_characterization.csv")
    for t, h, f, state, r in rows:
        if float(h) == 7.0 and t == "0.8":
            assert state == ("inverted" if float(f) >= 17.0 else "ground")


def test_outputs_byte_identical(tmp_path):
    cfg = {"hopfield": {"trials": 300}, "seed": 42}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    for run in ("a", "b"):
        assert cli.main(["run-experiment", "--config", str(path),
                         "--out", str(tmp_path / run)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
