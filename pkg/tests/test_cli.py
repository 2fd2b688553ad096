"""End-to-end checks of the vanetsim console entry point."""

import json

import pytest

from vanetsim.cli import main

MINI_DOC = {
    "name": "mini",
    "duration": 6,
    "seed": 7,
    "field": [1000, 600],
    "placements": [[0, [100, 300]], [1, [300, 300]], [2, [500, 300]]],
    "flows": [{"flow": "f0", "src": 0, "sink": 2, "start_t": 0.5,
               "send_interval": 0.2, "max_packets": 5}],
    "protocol_params": {"dsdv": {"update_interval": 1.0}},
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(MINI_DOC))
    return path


def test_run_subcommand_writes_artifacts(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--scenario", str(scenario_file), "--out", str(out)])
    assert code == 0
    assert (out / "trace.txt").is_file()
    assert (out / "summary.csv").is_file()
    assert (out / "metrics" / "f0" / "throughput.dat").is_file()
    stdout = capsys.readouterr().out
    assert "scenario: mini" in stdout
    assert "flow f0:" in stdout


def test_run_accepts_overrides(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--scenario", str(scenario_file),
                 "--protocol", "dsdv", "--seed", "3", "--duration", "12",
                 "--range", "300", "--window", "2", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "protocol: DSDV" in stdout
    assert "seed: 3" in stdout
    assert "duration: 12" in stdout


def test_builtin_run_requires_protocol(tmp_path, capsys):
    code = main(["run", "--scenario", "long-distance",
                 "--out", str(tmp_path / "out")])
    assert code == 1
    assert "--protocol" in capsys.readouterr().err


def test_unknown_scenario_is_a_validation_error(tmp_path, capsys):
    code = main(["run", "--scenario", "no-such-thing",
                 "--out", str(tmp_path / "out")])
    assert code == 1
    err = capsys.readouterr().err
    assert "no-such-thing" in err
    assert "long-distance" in err


def test_invalid_document_is_a_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"placements": [], "flows": []}))
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "placements" in capsys.readouterr().err


def test_unwritable_out_dir_is_an_io_error(scenario_file, tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a directory")
    code = main(["run", "--scenario", str(scenario_file),
                 "--out", str(blocker / "out")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_compare_subcommand_runs_both_protocols(scenario_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    code = main(["compare", "--scenario", str(scenario_file),
                 "--duration", "12", "--out", str(out)])
    assert code == 0
    assert (out / "aodv" / "trace.txt").is_file()
    assert (out / "dsdv" / "trace.txt").is_file()
    text = (out / "comparison.txt").read_text()
    assert "reactive=AODV" in text
    assert "proactive=DSDV" in text
    assert capsys.readouterr().out == text


def test_trace_parse_subcommand(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(scenario_file),
                 "--out", str(out)]) == 0
    capsys.readouterr()

    code = main(["trace-parse", str(out / "trace.txt")])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "motion records" in stdout

    mangled = tmp_path / "mangled.txt"
    mangled.write_text("M 0.00000 7 (bad line\n")
    assert main(["trace-parse", str(mangled)]) == 1

    assert main(["trace-parse", str(tmp_path / "missing.txt")]) == 2
