import os
import csv
import json
import glob

import pytest

import Scenarios
from Errors import ConfigError, EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL
from Export import read_qndm
from Scenarios import RunConfig, parse_run_config, load_run_config, run_scenario, multimode_params
from main import main

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

FAST = {"steps_per_cycle": 512, "step_audit": False, "samples": 5}
SMALL_WIGNER = {"points": 11, "min": -2.0, "max": 2.0}


def config(scenario, **sections):
    return parse_run_config(json.dumps(dict(scenario=scenario, **sections)))


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_json(path):
    with open(path) as f:
        return json.load(f)


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def small_multimode(**overrides):
    section = {"g0": 1.0, "z_p0": -3.0, "z_s0": -3.0, "medium": [-1.0, 1.0], "domain": [-8.0, 6.0],
               "points": 128, "cfl": 0.2, "t_end": 2.0, "sample_times": [1.0]}
    section.update(overrides)
    return section


def test_defaults():
    cfg = parse_run_config("{}")
    assert cfg == RunConfig()
    assert cfg.singlemode.alpha_p2 == 0.6
    assert cfg.detection.thresholds == (0.05, 0.01)


def test_integers_are_accepted_as_numbers():
    cfg = parse_run_config('{"singlemode": {"alpha_p2": 1, "gammas": {"p": 0}}}')
    assert isinstance(cfg.singlemode.alpha_p2, float)
    assert cfg.singlemode.gammas.p == 0.0


@pytest.mark.parametrize("text, message", [
    ('{"singlemode": {"alpah_p2": 0.6}}', "singlemode.alpah_p2"),
    ('{"multimode": {"calibration": {"steps": 3}}}', "multimode.calibration.steps"),
    ('{"singlemode": {"samples": 2.5}}', "singlemode.samples: expected an integer"),
    ('{"singlemode": {"vacuum_branch": 1}}', "singlemode.vacuum_branch: expected true or false"),
    ('{"sweep": {"alpha_p2": 0.5}}', "sweep.alpha_p2: expected a list"),
    ('{"sweep": {"alpha_p2": [0.1, "x"]}}', r"sweep.alpha_p2\[1\]"),
    ('{"detection": {"mode": 3}}', "detection.mode: expected a string"),
    ('{"scenario": "sweep", "scenario": "cascade"}', "Duplicate configuration key 'scenario'"),
    ('{"scenario": "intensity"}', "scenario must be one of"),
    ('{"sweep": {"alpha_p2": []}}', "must not be empty"),
    ('{"singlemode": {"signal_photons": 2}}', "0 or 1"),
    ('[1, 2]', "expected an object"),
])
def test_strict_parsing(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_run_config(text)


def test_syntax_errors_name_line_and_column():
    with pytest.raises(ConfigError, match=r"run\.json:3:3:"):
        parse_run_config('{\n  "scenario": "sweep"\n  "output": "out"\n}', "run.json")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="Cannot read"):
        load_run_config(str(tmp_path / "missing.json"))


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(ROOT, "configs", "*.json"))))
def test_shipped_configurations_parse(path):
    cfg = load_run_config(path)
    assert cfg.scenario is not None


def test_multimode_params_of_shipped_configuration():
    cfg = load_run_config(os.path.join(ROOT, "configs", "scan_over.json"))
    params = multimode_params(cfg.multimode, g0=2.0)
    assert params.g0 == 2.0
    assert params.v_s == 0.6
    assert params.grid.n == 512
    assert params.medium == (-6.0, 10.0)


def test_scenario_mismatch_and_threads(tmp_path):
    cfg = config("sweep")
    with pytest.raises(ConfigError):
        run_scenario("singlemode", cfg, str(tmp_path))
    with pytest.raises(ConfigError):
        run_scenario("sweep", cfg, str(tmp_path), threads=0)


def test_vacuum_signal_never_clicks(tmp_path):
    cfg = config("singlemode", singlemode=dict(FAST, signal_photons=0), wigner=SMALL_WIGNER)
    out = str(tmp_path / "vacuum")
    summary = run_scenario("singlemode", cfg, out)
    assert summary["report"]["p_click_vacuum"] < 1e-8
    assert summary["report"]["signal_fidelity"] == 0.0
    with open(os.path.join(out, "observables.csv"), newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][0] == "z"
    assert len(rows) == 6
    for name in ("signal", "transmitted", "detected", "detected_vacuum"):
        assert os.path.isfile(os.path.join(out, "wigner_%s.csv" % (name,)))
    assert read_json(os.path.join(out, "report.json"))["z_end"] == pytest.approx(6.283185307179586)


def test_outputs_are_deterministic(tmp_path):
    cfg = config("singlemode", singlemode=FAST, wigner=SMALL_WIGNER)
    first, second = str(tmp_path / "first"), str(tmp_path / "second")
    run_scenario("singlemode", cfg, first)
    run_scenario("singlemode", cfg, second)
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    for name in names:
        assert read_bytes(os.path.join(first, name)) == read_bytes(os.path.join(second, name))


def test_without_coupling_the_probe_is_untouched(tmp_path):
    cfg = config("singlemode", singlemode=dict(FAST, g=0.0, vacuum_branch=False), wigner=SMALL_WIGNER)
    summary = run_scenario("singlemode", cfg, str(tmp_path))
    report = summary["report"]
    assert report["signal_fidelity"] == pytest.approx(1.0)
    assert report["p_err_numeric"] == pytest.approx(1.0, abs=1e-9)
    assert report["cascade_N"] is None
    assert summary["cascade_efficiency_ratio"] is None
    assert summary["efficiency_ratio"] == pytest.approx(1.0, abs=1e-9)


def test_sweep_is_independent_of_worker_count(tmp_path):
    cfg = config("sweep", singlemode=FAST, sweep={"alpha_p2": [0.2, 0.6, 1.0]})
    run_scenario("sweep", cfg, str(tmp_path / "one"), threads=1)
    run_scenario("sweep", cfg, str(tmp_path / "two"), threads=2)
    assert read_bytes(str(tmp_path / "one" / "sweep.csv")) == read_bytes(str(tmp_path / "two" / "sweep.csv"))
    summary = read_json(str(tmp_path / "two" / "sweep.json"))
    assert [p["alpha_p2"] for p in summary["points"]] == [0.2, 0.6, 1.0]


def test_cascade_table(tmp_path):
    cfg = config("cascade", singlemode=dict(FAST, vacuum_branch=False), sweep={"alpha_p2": [0.2]},
                 detection={"thresholds": [0.05, 0.001]})
    summary = run_scenario("cascade", cfg, str(tmp_path))
    rows = summary["rows"]
    assert [r["threshold"] for r in rows] == [0.05, 0.001]
    assert rows[0]["n_numeric"] == 4
    assert rows[1]["n_numeric"] > rows[0]["n_numeric"]
    assert rows[0]["p_err_numeric_n"] < 0.05


def test_wigner_scenario(tmp_path):
    cfg = config("wigner", singlemode=dict(FAST, vacuum_branch=False), wigner=SMALL_WIGNER)
    summary = run_scenario("wigner", cfg, str(tmp_path))
    assert set(summary["wigner"]) == {"signal", "transmitted", "detected"}
    assert summary["wigner"]["signal"]["origin"] < 0


def test_multimode_scenario_files(tmp_path):
    cfg = config("multimode", multimode=small_multimode(binary_dump=True))
    summary = run_scenario("multimode", cfg, str(tmp_path))
    for k in range(3):
        assert os.path.isfile(str(tmp_path / ("snapshot_%03i.csv" % k)))
        assert os.path.isfile(str(tmp_path / ("phase_%03i.csv" % k)))
        assert os.path.isfile(str(tmp_path / ("auxiliary_%03i.csv" % k)))
    dump = read_qndm(str(tmp_path / "snapshot_002.qndm"))
    assert dump["time"] == 2.0
    assert dump["fields"][0].shape == (128, 128)
    assert 0.0 <= summary["fidelity"] <= 1.0
    assert summary["calibration"] is None
    assert read_json(str(tmp_path / "fidelity.json"))["grid"]["n"] == 128


def test_multimode_calibration_is_reported(monkeypatch, tmp_path):
    monkeypatch.setattr(Scenarios, "calibrate_g0", lambda params, t_end, scan, xatol: (0.5, 0.25, [(0.5, 0.25)]))
    cfg = config("multimode", multimode=small_multimode(g0=None))
    summary = run_scenario("multimode", cfg, str(tmp_path))
    assert summary["g0"] == 0.5
    assert summary["calibration"]["scan"] == [{"g0": 0.5, "fidelity": 0.25}]


def test_main_exit_codes(tmp_path):
    good = write_config(tmp_path, {"scenario": "singlemode", "singlemode": dict(FAST, signal_photons=0),
                                   "wigner": SMALL_WIGNER})
    assert main(["singlemode", "--config", good, "--out", str(tmp_path / "ok")]) == EXIT_OK

    unknown = write_config(tmp_path, {"singlemode": {"alpha": 1.0}}, "unknown.json")
    assert main(["singlemode", "--config", unknown, "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["singlemode", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "x")]) == EXIT_CONFIG

    cfl = write_config(tmp_path, {"multimode": small_multimode(cfl=0.9)}, "cfl.json")
    assert main(["multimode", "--config", cfl, "--out", str(tmp_path / "x")]) == EXIT_CONFIG

    drift = write_config(tmp_path, {"multimode": small_multimode(norm_tolerance=1e-30)}, "drift.json")
    assert main(["multimode", "--config", drift, "--out", str(tmp_path / "x")]) == EXIT_NUMERICAL

    crowded = write_config(tmp_path, {"multimode": small_multimode(z_p0=-7.0)}, "crowded.json")
    assert main(["multimode", "--config", crowded, "--out", str(tmp_path / "x")]) == EXIT_CONFIG

    leaving = write_config(tmp_path, {"multimode": small_multimode(t_end=8.0, sample_times=[])}, "leaving.json")
    assert main(["multimode", "--config", leaving, "--out", str(tmp_path / "x")]) == EXIT_NUMERICAL


def test_help_explains_the_local_oscillator(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    assert "local oscillator alpha_p * exp(-gamma_p * z / 2)" in text
    assert "calibrate_displacement" in text


def test_unknown_scenario_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["figure", "--config", "x.json", "--out", str(tmp_path)])
    assert info.value.code == 2


@pytest.mark.slow
def test_intensity_sweep_minimum(tmp_path):
    cfg = load_run_config(os.path.join(ROOT, "configs", "intensity_sweep.json"))
    summary = run_scenario("sweep", cfg, str(tmp_path), threads=2)
    best = summary["minimum_p_err"]
    assert best["alpha_p2"] == pytest.approx(0.6, abs=0.1 + 1e-9)
    assert best["p_err_numeric"] == pytest.approx(0.09, abs=0.02)
