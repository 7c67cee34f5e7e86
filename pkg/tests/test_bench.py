import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rhsradar import bench
from rhsradar.bench import (ExperimentSpec, ScenarioConfig, SpecError, SweepConfig, emit_csv, load_spec,
                            loads_spec, read_csv, run_experiment, summarize, sweep_points)
from rhsradar.draoa import DraoaConfig

SMALL = """
name: small
trials: 2
scenario: {n_per_panel: 2, n_tx: 1, n_rx: 1, n_feeds: 2, snapshots_tx: 4, snapshots_rx: 4}
sweep: {axis: n_tx, values: [1, 2], series: [1]}
draoa: {n_tx_samples: 8, n_rx_samples: 8}
"""


def test_defaults_match_reference_constants():
    spec = loads_spec("scenario: {}\n")
    sc = spec.scenario
    assert sc.p_max == 4e-3 and sc.n_feeds == 5 and sc.attenuation == 5.0
    assert sc.refractive_index == pytest.approx(math.sqrt(3))
    assert sc.noise_power == 4e-6 and sc.snr_db == 6.0 and sc.inr_db == 6.0
    assert sc.targets == [[0.5, 2.0, 1.0], [1.0, 1.5, 1.0]] and sc.clutter == [[1.0, 2.0, 2.0]]
    assert sc.spacing_wavelengths == pytest.approx(1 / 3) and sc.wavelength == 0.01
    assert sc.target_var == pytest.approx(4e-6 * 10 ** 0.6)
    assert spec.draoa == DraoaConfig()


@pytest.mark.parametrize("text, msg", [
    ("trials: 0\n", "trials"),
    ("bogus: 1\n", "unknown key"),
    ("scenario: {n_feeds: 2.5}\n", "integer"),
    ("scenario: {colour: red}\n", "unknown key"),
    ("sweep: {axis: n_tx, values: [2, 1]}\n", "strictly increasing"),
    ("sweep: {axis: angle}\n", "axis"),
    ("draoa: {n_tx_samples: 0}\n", "draoa"),
    ("baseline: {eta_rhs: 2}\n", "baseline"),
    ("scenario: {n_tx: 9}\nsweep: {axis: n_rx, values: [1]}\n", "at most"),
    ("sweep: {axis: n_rx, values: [1, 2], series: [3]}\n", "no elements"),
])
def test_invalid_specs_are_named(text, msg):
    with pytest.raises(SpecError, match=msg):
        loads_spec(text)


def test_parse_error_has_position():
    with pytest.raises(SpecError, match=r"<string>:2:\d+"):
        loads_spec("trials: 3\nscenario: {a: 1: 2}\n")


def test_missing_file(tmp_path):
    with pytest.raises(SpecError, match="cannot read"):
        load_spec(tmp_path / "nope.yaml")


def test_round_trip(tmp_path):
    spec = bench.preset("fig2c")
    path = tmp_path / "spec.yaml"
    path.write_text(bench.dump_spec(spec))
    again = load_spec(path)
    assert again == spec
    assert again.hash() == spec.hash()


def test_hash_ignores_output_block():
    a = loads_spec(SMALL)
    b = dataclasses.replace(a, output=bench.OutputConfig(dir="/tmp/x", workers=3))
    c = dataclasses.replace(a, seed=1)
    assert a.hash() == b.hash() != c.hash()


def test_sweep_points_fixed_total():
    spec = ExperimentSpec(sweep=SweepConfig("n_rx", [1, 2, 3, 4], [60]))
    pts = sweep_points(spec)
    assert [p.n_per_panel for p in pts] == [20, 15, 12, 10]
    assert all(p.n_tx == 2 for p in pts)
    spec = ExperimentSpec(sweep=SweepConfig("cost_budget", [20, 40]))
    assert [p.n_per_panel for p in sweep_points(spec)] == [20, 40]


def test_phased_count_rounds_up():
    assert bench.phased_count(40, 10) == 4
    assert bench.phased_count(20, 6) == 4
    assert bench.phased_count(3, 10) == 1


def test_scenes_are_nested_across_sweep_points():
    spec = loads_spec(SMALL)
    pts = sweep_points(spec)
    a, b = bench.build_scene(spec, pts[0], 0), bench.build_scene(spec, pts[1], 0)
    assert np.allclose(a.tx_panels[0].center, b.tx_panels[0].center)
    assert np.allclose(a.rx_panels[0].center, b.rx_panels[0].center)
    c = bench.build_scene(spec, pts[0], 1)
    assert not np.allclose(a.tx_panels[0].center, c.tx_panels[0].center)


def test_exponential_fading_is_per_pair():
    spec = loads_spec(SMALL.replace("snapshots_rx: 4}", "snapshots_rx: 4, rcs_fluctuation: exponential}"))
    pts = sweep_points(spec)
    v1 = bench.build_scene(spec, pts[0], 0).variances()
    v2 = bench.build_scene(spec, pts[1], 0).variances()
    assert v2.shape == (2, 1, 3)
    assert np.allclose(v1[0], v2[0])  # the shared pair keeps its draw
    assert not np.allclose(v2[0], v2[1])


def test_empty_table_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(bench.TRIAL_COLUMNS) + "\n"


def _row(**kw):
    base = dict(series="", value=20.0, scheme="rhs", trial=0, n_tx=2, n_rx=2, n_per_panel=20, hardware_cost=80,
                radiated_power=0.008, sinr_linear=0.123456789, sinr_db=-9.0849, bound_linear=0.2,
                outer_iterations=3, inner_iterations=9, status="ok")
    base.update(kw)
    return base


def test_emit_is_deterministic_and_reparses(tmp_path):
    rows = [_row(trial=t, sinr_linear=0.1 * (t + 1), sinr_db=10 * np.log10(0.1 * (t + 1))) for t in range(3)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(rows, a, spec_hash="abc")
    emit_csv(rows, b, spec_hash="abc")
    assert a.read_bytes() == b.read_bytes()
    h, back = read_csv(a)
    assert h == "abc"
    for r, s in zip(rows, back):
        assert float(s["sinr_linear"]) == pytest.approx(r["sinr_linear"], rel=1e-6)
        assert int(s["trial"]) == r["trial"]
    assert back[0]["sinr_linear"] == "0.1"


@given(x=st.floats(1e-12, 1e12))
def test_six_significant_digits(x):
    s = bench._fmt(x)
    assert float(s) == pytest.approx(x, rel=5e-6)
    assert len(s.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 6


def test_emit_reports_path(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        emit_csv([], tmp_path / "missing" / "x.csv")


def test_summary_recomputes_from_rows():
    spec = loads_spec(SMALL)
    rows = [_row(series="n_rx=1", value=1.0, trial=t, sinr_db=float(d), sinr_linear=10 ** (d / 10))
            for t, d in enumerate([-3.0, -5.0])]
    rows.append(_row(series="n_rx=1", value=1.0, trial=2, sinr_db=math.nan, sinr_linear=math.nan,
                     status="failed: x"))
    s = summarize(rows, spec)
    assert len(s) == 1
    assert s[0]["sinr_db_mean"] == pytest.approx(-4.0, abs=1e-9)
    assert s[0]["sinr_db_std"] == pytest.approx(1.0, abs=1e-9)
    assert s[0]["failed"] == 1 and s[0]["trials"] == 2 and s[0]["is_argmax"]


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return out, run_experiment(loads_spec(SMALL), out_dir=out)


def test_small_run_outputs(small_run):
    out, res = small_run
    assert res.failures == 0
    assert len(res.trial_rows) == 4
    for name in ("trials.csv", "summary.csv", "timing.csv", "meta.json", "spec.yaml"):
        assert (out / name).exists()
    h, rows = read_csv(out / "trials.csv")
    assert h == res.spec_hash and len(rows) == 4
    for r in rows:
        assert float(r["sinr_db"]) == pytest.approx(10 * np.log10(float(r["sinr_linear"])), abs=1e-4)
        assert float(r["sinr_linear"]) <= float(r["bound_linear"]) * (1 + 1e-5)
    # statistics recompute from the persisted rows
    parsed = [bench._parse_trial(r) for r in rows]
    again = summarize(parsed, loads_spec(SMALL))
    for a, b in zip(again, res.summary):
        assert a["sinr_db_mean"] == pytest.approx(b["sinr_db_mean"], abs=1e-9)
    assert load_spec(out / "spec.yaml") == loads_spec(SMALL)


def test_resume_skips_finished_trials(small_run, monkeypatch):
    out, res = small_run
    before = (out / "trials.csv").read_bytes()

    def fail(*a, **k):
        raise AssertionError("trial should have been skipped")

    monkeypatch.setattr(bench, "run_trial", fail)
    again = run_experiment(loads_spec(SMALL), out_dir=out)
    assert (out / "trials.csv").read_bytes() == before
    assert len(again.trial_rows) == 4


def test_resume_refuses_other_spec(small_run):
    out, _ = small_run
    with pytest.raises(SpecError, match="fresh output directory"):
        run_experiment(loads_spec(SMALL.replace("trials: 2", "trials: 3")), out_dir=out)


def test_partial_resume_matches_full_run(tmp_path, small_run):
    out_full, _ = small_run
    spec = loads_spec(SMALL)
    h, rows = read_csv(out_full / "trials.csv")
    part = tmp_path / "part"
    part.mkdir()
    # keep only the first two rows, as if the run was interrupted
    emit_csv([bench._parse_trial(r) for r in rows[:2]], part / "trials.csv", spec_hash=h)
    run_experiment(spec, out_dir=part)
    assert (part / "trials.csv").read_bytes() == (out_full / "trials.csv").read_bytes()


def test_single_budget_point_gives_four_rows(tmp_path):
    spec = ExperimentSpec(trials=1, scenario=ScenarioConfig(n_tx=1, n_rx=1, n_feeds=2),
                          sweep=SweepConfig("cost_budget", [4]),
                          draoa=DraoaConfig(n_tx_samples=8, n_rx_samples=8))
    res = bench.run_fig2a(spec)
    assert [r["scheme"] for r in res.trial_rows] == ["rhs", "phased-d6", "phased-d8", "phased-d10"]
    assert [r["n_per_panel"] for r in res.trial_rows] == [4, 1, 1, 1]
    for r in res.trial_rows:
        assert r["sinr_db"] == pytest.approx(10 * np.log10(r["sinr_linear"]), abs=1e-4)


def test_runner_axis_checks():
    with pytest.raises(SpecError, match="cost_budget"):
        bench.run_fig2a(loads_spec(SMALL))
    with pytest.raises(SpecError, match="n_rx"):
        bench.run_fig2c(loads_spec(SMALL))


def test_presets():
    a = bench.preset("fig2a")
    assert a.sweep.axis == "cost_budget" and a.baseline.enabled and a.trials == 20
    assert a.scenario.n_tx == a.scenario.n_rx == 2
    b = bench.preset("fig2b", trials=3)
    assert b.trials == 3 and b.sweep.values == [1, 2, 3, 4]
    c = bench.preset("fig2c")
    assert c.scenario.n_tx == 2 and c.sweep.axis == "n_rx"
    with pytest.raises(SpecError):
        bench.preset("fig3")
