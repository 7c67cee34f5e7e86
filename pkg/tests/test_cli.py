import subprocess
import sys

import pytest

from rhsradar import bench
from rhsradar.cli import main

SMALL = """
name: cli
trials: 1
scenario: {n_per_panel: 2, n_tx: 1, n_rx: 1, n_feeds: 2, snapshots_tx: 4, snapshots_rx: 4}
sweep: {axis: n_tx, values: [1], series: [1]}
draoa: {n_tx_samples: 4, n_rx_samples: 4}
"""


def test_run_writes_outputs(tmp_path, capsys):
    spec = tmp_path / "s.yaml"
    spec.write_text(SMALL)
    out = tmp_path / "out"
    assert main(["run", str(spec), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "spec_hash" in text and "rhs" in text
    assert (out / "trials.csv").exists() and (out / "summary.csv").exists()


def test_bad_spec_exits_two(tmp_path, capsys):
    spec = tmp_path / "s.yaml"
    spec.write_text("trials: 0\n")
    assert main(["run", str(spec)]) == 2
    assert "trials" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_bad_arguments_exit_two(capsys):
    assert main(["fig2a", "--trials", "many"]) == 2
    assert main([]) == 2
    assert main(["--help"]) == 0


def test_print_spec_round_trips(capsys):
    assert main(["fig2b", "--print-spec"]) == 0
    text = capsys.readouterr().out
    assert bench.loads_spec(text) == bench.preset("fig2b")


def test_validate_passes(capsys):
    assert main(["validate", "--instances", "3", "--draoa-instances", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_oracle_reports_ratio(capsys):
    assert main(["oracle", "--step", "0.25"]) == 0
    out = capsys.readouterr().out
    ratio = float(out.strip().splitlines()[-1].split()[-1])
    assert ratio > 0.9


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rhsradar", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "fig2c" in r.stdout
