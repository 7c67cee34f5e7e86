"""Experiment specs, Monte Carlo sweeps and CSV persistence."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import time
import typing
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baseline import CostModel, grid_shape, phased_mimo_beamform
from .draoa import DraoaConfig, DraoaError, run_draoa
from .rhs import RhsPanel
from .scenario import Scatterer, Scene, random_centers, trial_rng

log = logging.getLogger(__name__)

AXES = ("cost_budget", "n_tx", "n_rx", "n_sum_allocation")
MAX_SUBARRAYS = 8  # per side; fixes the nested geometry draw


class SpecError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    wavelength: float = 0.01
    p_max: float = 4e-3
    spacing_wavelengths: float = 1 / 3
    n_feeds: int = 5
    refractive_index: float = math.sqrt(3.0)
    attenuation: float = 5.0
    noise_power: float = 4e-6
    snr_db: float = 6.0
    inr_db: float = 6.0
    targets: list = field(default_factory=lambda: [[0.5, 2.0, 1.0], [1.0, 1.5, 1.0]])
    clutter: list = field(default_factory=lambda: [[1.0, 2.0, 2.0]])
    n_tx: int = 2
    n_rx: int = 2
    n_per_panel: int = 16
    snapshots_tx: int = 16
    snapshots_rx: int = 16
    box: list = field(default_factory=lambda: [[0.0, 2.0], [0.0, 2.0]])
    rcs_fluctuation: str = "none"  # or "exponential": per-pair variance sigma_l^2 * Exp(1)

    def validate(self, path="scenario"):
        for name in ("wavelength", "p_max", "spacing_wavelengths", "noise_power"):
            if not getattr(self, name) > 0:
                raise SpecError(f"{path}.{name} must be > 0")
        for name in ("n_feeds", "n_tx", "n_rx", "n_per_panel", "snapshots_tx", "snapshots_rx"):
            if getattr(self, name) < 1:
                raise SpecError(f"{path}.{name} must be >= 1")
        if not self.targets:
            raise SpecError(f"{path}.targets needs at least one target")
        for name in ("targets", "clutter"):
            for i, pos in enumerate(getattr(self, name)):
                if len(pos) != 3 or not all(isinstance(v, (int, float)) for v in pos):
                    raise SpecError(f"{path}.{name}[{i}] must be an [x, y, z] triple")
        if len(self.box) != 2 or any(len(b) != 2 or not b[0] < b[1] for b in self.box):
            raise SpecError(f"{path}.box must be [[x0, x1], [y0, y1]] with x0 < x1, y0 < y1")
        if self.rcs_fluctuation not in ("none", "exponential"):
            raise SpecError(f"{path}.rcs_fluctuation must be 'none' or 'exponential'")

    @property
    def target_var(self) -> float:
        return self.noise_power * 10 ** (self.snr_db / 10)

    @property
    def clutter_var(self) -> float:
        return self.noise_power * 10 ** (self.inr_db / 10)


@dataclass
class SweepConfig:
    axis: str = "n_tx"
    values: list = field(default_factory=lambda: [1, 2])
    # n_tx axis: n_rx values; n_rx axis: N_sum values (empty keeps n_per_panel);
    # n_sum_allocation axis: n_rx values; cost_budget axis: unused
    series: list = field(default_factory=list)

    def validate(self, path="sweep"):
        if self.axis not in AXES:
            raise SpecError(f"{path}.axis must be one of {', '.join(AXES)}")
        if not self.values:
            raise SpecError(f"{path}.values must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise SpecError(f"{path}.values must be strictly increasing")
        if any(not v > 0 for v in self.values + self.series):
            raise SpecError(f"{path} values must be > 0")


@dataclass
class BaselineConfig:
    enabled: bool = False
    adaptive: bool = False
    deltas: list = field(default_factory=lambda: [6, 8, 10])
    reference_delta: float = 10.0
    eta_rhs: float = 0.25
    eta_phased: float = 0.04
    phased_unit_cost: float = 10.0

    def validate(self, path="baseline"):
        try:
            for d in self.deltas + [self.reference_delta]:
                CostModel(self.eta_rhs, self.eta_phased, d, self.phased_unit_cost)
        except ValueError as exc:
            raise SpecError(f"{path}: {exc}") from exc


@dataclass
class OutputConfig:
    dir: str = ""
    workers: int = 1
    traces: bool = False

    def validate(self, path="output"):
        if self.workers < 1:
            raise SpecError(f"{path}.workers must be >= 1")


@dataclass
class ExperimentSpec:
    name: str = "custom"
    seed: int = 0
    trials: int = 20
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    draoa: DraoaConfig = field(default_factory=DraoaConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self):
        if self.trials < 1:
            raise SpecError("trials must be >= 1")
        self.scenario.validate()
        self.sweep.validate()
        self.baseline.validate()
        self.output.validate()
        for pt in sweep_points(self):
            if pt.n_tx > MAX_SUBARRAYS or pt.n_rx > MAX_SUBARRAYS:
                raise SpecError(f"at most {MAX_SUBARRAYS} subarrays per side")
            if pt.n_per_panel < 1:
                raise SpecError(f"sweep point {pt.series}/{pt.value} leaves no elements per panel")
            if self.scenario.snapshots_tx < pt.n_tx:
                raise SpecError("scenario.snapshots_tx must be >= the number of transmit subarrays")
        if self.scenario.snapshots_rx < self.scenario.snapshots_tx:
            raise SpecError("scenario.snapshots_rx must be >= snapshots_tx")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Digest of everything that affects results (output block excluded)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- loading ---------------------------------------------------------------------

def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin is typing.Union or (origin is not None and type(None) in typing.get_args(tp)):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(args[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise SpecError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise SpecError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is list:
        if not isinstance(value, list):
            raise SpecError(f"{path}: expected a list, got {value!r}")
        return value
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SpecError(f"{path or 'spec'}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise SpecError(f"{path or 'spec'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(hints[k], v, f"{path}.{k}" if path else k) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise SpecError(f"{path or 'spec'}: {exc}") from exc


def spec_from_dict(data: dict) -> ExperimentSpec:
    return _build(ExperimentSpec, data, "").validate()


def loads_spec(text: str, source: str = "<string>") -> ExperimentSpec:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise SpecError(f"{where}: {getattr(exc, 'problem', exc)}") from exc
    return spec_from_dict(data or {})


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    return loads_spec(text, str(path))


def dump_spec(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=False)


# -- sweep geometry --------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    series: str
    value: float
    n_tx: int
    n_rx: int
    n_per_panel: int
    cost_budget: float | None = None


def _num(v) -> str:
    return format(v, "g")


def sweep_points(spec: ExperimentSpec) -> list:
    sc, sw = spec.scenario, spec.sweep
    out = []
    if sw.axis == "cost_budget":
        unit = spec.baseline.phased_unit_cost / spec.baseline.reference_delta
        for v in sw.values:
            n = v / unit
            if abs(n - round(n)) > 1e-9:
                raise SpecError(f"cost budget {v} does not buy a whole number of RHS elements")
            out.append(SweepPoint("", v, sc.n_tx, sc.n_rx, int(round(n)), v))
    elif sw.axis == "n_tx":
        for q in sw.series or [sc.n_rx]:
            out += [SweepPoint(f"n_rx={_num(q)}", v, int(v), int(q), sc.n_per_panel) for v in sw.values]
    elif sw.axis == "n_rx":
        if sw.series:
            for n_sum in sw.series:
                out += [SweepPoint(f"n_sum={_num(n_sum)}", v, sc.n_tx, int(v), int(n_sum) // (sc.n_tx + int(v)))
                        for v in sw.values]
        else:
            out = [SweepPoint("", v, sc.n_tx, int(v), sc.n_per_panel) for v in sw.values]
    else:  # n_sum_allocation
        for q in sw.series or [sc.n_rx]:
            out += [SweepPoint(f"n_rx={_num(q)}", v, sc.n_tx, int(q), int(v) // (sc.n_tx + int(q)))
                    for v in sw.values]
    return out


def build_scene(spec: ExperimentSpec, point: SweepPoint, trial: int, n_elements: int | None = None) -> Scene:
    """Scene for one trial; subarray ``i`` sits at the same place for every sweep point."""
    sc = spec.scenario
    n = point.n_per_panel if n_elements is None else n_elements
    centers = random_centers(2 * MAX_SUBARRAYS, trial_rng(spec.seed, trial, 0), box=sc.box)
    n_x, n_y = grid_shape(n)
    spacing = sc.spacing_wavelengths * sc.wavelength

    def panel(c):
        return RhsPanel(n_x, n_y, spacing, n_feeds=sc.n_feeds, center=c)

    tx = [panel(centers[p]) for p in range(point.n_tx)]
    rx = [panel(centers[MAX_SUBARRAYS + q]) for q in range(point.n_rx)]
    positions = [(t, "target", sc.target_var) for t in sc.targets] + [(c, "clutter", sc.clutter_var)
                                                                      for c in sc.clutter]
    if sc.rcs_fluctuation == "exponential":
        fade = trial_rng(spec.seed, trial, 1).exponential(size=(len(positions), MAX_SUBARRAYS, MAX_SUBARRAYS))
        scat = [Scatterer(pos, kind, var, per_pair_var=var * fade[i, :point.n_tx, :point.n_rx])
                for i, (pos, kind, var) in enumerate(positions)]
    else:
        scat = [Scatterer(pos, kind, var) for pos, kind, var in positions]
    return Scene(tx, rx, scat, wavelength=sc.wavelength, noise_power=sc.noise_power, p_max=sc.p_max,
                 snapshots_tx=sc.snapshots_tx, snapshots_rx=sc.snapshots_rx,
                 refractive_index=sc.refractive_index, attenuation=sc.attenuation, rng_seed=spec.seed)


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial), 2]).generate_state(1)[0])


def phased_count(n_rhs: int, delta: float) -> int:
    """Phased elements costing what ``n_rhs`` RHS elements cost, rounded up."""
    return max(1, math.ceil(n_rhs / delta - 1e-9))


# -- running ---------------------------------------------------------------------

TRIAL_COLUMNS = ["series", "value", "scheme", "trial", "n_tx", "n_rx", "n_per_panel", "hardware_cost",
                 "radiated_power", "sinr_linear", "sinr_db", "bound_linear", "outer_iterations",
                 "inner_iterations", "status"]
SUMMARY_COLUMNS = ["series", "value", "scheme", "trials", "n_per_panel", "hardware_cost", "sinr_db_mean",
                   "sinr_db_std", "sinr_linear_mean", "bound_db_mean", "outer_mean", "inner_mean", "failed",
                   "is_argmax"]


def schemes(spec: ExperimentSpec) -> list:
    tags = ["rhs"]
    if spec.baseline.enabled:
        tags += [f"phased-d{_num(d)}" for d in spec.baseline.deltas]
    return tags


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return format(float(v), ".6g")
    return str(v)


def run_trial(spec: ExperimentSpec, point: SweepPoint, trial: int, trace_dir: str | None = None) -> list:
    """Every scheme for one (sweep point, trial); returns row dicts plus runtimes."""
    sc, bl = spec.scenario, spec.baseline
    scene = build_scene(spec, point, trial)
    panels = point.n_tx + point.n_rx
    consumed = point.n_tx * sc.p_max / bl.eta_rhs
    rows = []
    base = {"series": point.series, "value": point.value, "trial": trial, "n_tx": point.n_tx, "n_rx": point.n_rx}

    cfg = dataclasses.replace(spec.draoa, rng_seed=trial_seed(spec.seed, trial))
    t0 = time.perf_counter()
    row = dict(base, scheme="rhs", n_per_panel=point.n_per_panel,
               hardware_cost=panels * point.n_per_panel * bl.phased_unit_cost / bl.reference_delta,
               radiated_power=point.n_tx * sc.p_max)
    try:
        sink = None
        if trace_dir:
            tag = f"{point.series or 'all'}_{_num(point.value)}_t{trial}".replace("=", "")
            sink = open(Path(trace_dir) / f"trace_{tag}.jsonl", "w", encoding="utf-8")
        try:
            res = run_draoa(scene, cfg, trace_sink=sink)
        finally:
            if sink:
                sink.close()
        row.update(sinr_linear=res.worst_case_sinr, sinr_db=res.worst_case_db, bound_linear=res.relaxed_bound,
                   outer_iterations=res.outer_iterations, inner_iterations=res.inner_iterations, status="ok")
    except (DraoaError, ValueError) as exc:
        row.update(sinr_linear=math.nan, sinr_db=math.nan, bound_linear=math.nan, outer_iterations=0,
                   inner_iterations=0, status=f"failed: {exc}".replace("\n", " "))
    row["runtime"] = time.perf_counter() - t0
    rows.append(row)

    if bl.enabled:
        for d in bl.deltas:
            n_ph = phased_count(point.n_per_panel, d)
            t0 = time.perf_counter()
            radiated = bl.eta_phased * consumed
            r = phased_mimo_beamform(scene, n_ph, radiated / point.n_tx, adaptive=bl.adaptive)
            rows.append(dict(base, scheme=f"phased-d{_num(d)}", n_per_panel=n_ph,
                             hardware_cost=panels * n_ph * bl.phased_unit_cost, radiated_power=radiated,
                             sinr_linear=r.report.worst_case, sinr_db=r.report.worst_case_db,
                             bound_linear=math.nan, outer_iterations=0, inner_iterations=0, status="ok",
                             runtime=time.perf_counter() - t0))
    return rows


def _header(spec_hash: str) -> str:
    return f"# spec_hash={spec_hash}\n"


def emit_csv(rows, path, columns=None, spec_hash: str = "") -> None:
    """Write rows with 6-significant-digit floats; the header line order is fixed."""
    columns = columns or TRIAL_COLUMNS
    buf = io.StringIO()
    if spec_hash:
        buf.write(_header(spec_hash))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> tuple:
    """Returns (spec_hash, rows as dicts of strings)."""
    text = Path(path).read_text(encoding="utf-8")
    spec_hash = ""
    lines = text.splitlines()
    if lines and lines[0].startswith("# spec_hash="):
        spec_hash = lines[0].split("=", 1)[1].strip()
        lines = lines[1:]
    return spec_hash, list(csv.DictReader(lines))


def emit_trace(result, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in result.trace:
            fh.write(json.dumps(dataclasses.asdict(rec)) + "\n")


def _parse_trial(row: dict) -> dict:
    out = dict(row)
    for k in ("value", "hardware_cost", "radiated_power", "sinr_linear", "sinr_db", "bound_linear"):
        out[k] = float(row[k])
    for k in ("trial", "n_tx", "n_rx", "n_per_panel", "outer_iterations", "inner_iterations"):
        out[k] = int(row[k])
    return out


def summarize(trial_rows: list, spec: ExperimentSpec) -> list:
    """Per (series, value, scheme) statistics over trials; dB stats average the dB values."""
    order = {(p.series, p.value): i for i, p in enumerate(sweep_points(spec))}
    tags = schemes(spec)
    groups = {}
    for r in trial_rows:
        groups.setdefault((r["series"], r["value"], r["scheme"]), []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (order.get(k[:2], 1e9), tags.index(k[2]) if k[2] in tags else 99)):
        rs = groups[key]
        ok = [r for r in rs if r["status"] == "ok" and np.isfinite(r["sinr_db"])]
        db = np.array([r["sinr_db"] for r in ok])
        lin = np.array([r["sinr_linear"] for r in ok])
        bound = np.array([r["bound_linear"] for r in ok])
        with np.errstate(divide="ignore", invalid="ignore"):
            bound_db = float(np.mean(10 * np.log10(bound))) if len(bound) and np.all(np.isfinite(bound)) \
                else math.nan
        out.append({
            "series": key[0], "value": key[1], "scheme": key[2], "trials": len(ok),
            "n_per_panel": rs[0]["n_per_panel"], "hardware_cost": rs[0]["hardware_cost"],
            "sinr_db_mean": float(db.mean()) if len(db) else math.nan,
            "sinr_db_std": float(db.std()) if len(db) else math.nan,
            "sinr_linear_mean": float(lin.mean()) if len(lin) else math.nan,
            "bound_db_mean": bound_db,
            "outer_mean": float(np.mean([r["outer_iterations"] for r in ok])) if ok else math.nan,
            "inner_mean": float(np.mean([r["inner_iterations"] for r in ok])) if ok else math.nan,
            "failed": len(rs) - len(ok), "is_argmax": False,
        })
    # flag the best sweep value of every (series, scheme) curve
    curves = {}
    for r in out:
        curves.setdefault((r["series"], r["scheme"]), []).append(r)
    for rs in curves.values():
        vals = [r["sinr_db_mean"] for r in rs]
        if any(np.isfinite(vals)):
            rs[int(np.nanargmax(vals))]["is_argmax"] = True
    return out


@dataclass
class RunOutcome:
    spec_hash: str
    trial_rows: list
    summary: list
    failures: int
    out_dir: Path | None


def _tasks(spec):
    return [(i, pt, t) for i, pt in enumerate(sweep_points(spec)) for t in range(spec.trials)]


def run_experiment(spec: ExperimentSpec, out_dir=None, workers: int | None = None, progress=None) -> RunOutcome:
    """Run every (sweep point, trial); resumable when ``out_dir`` already holds trials.

    Per-trial rows are appended to ``trials.csv`` as they finish and the
    file is rewritten in canonical order at the end, so the final files do
    not depend on worker scheduling.  Runtimes go to ``timing.csv``.
    """
    spec.validate()
    spec_hash = spec.hash()
    out_dir = Path(out_dir or spec.output.dir) if (out_dir or spec.output.dir) else None
    workers = workers or spec.output.workers
    done, timing = {}, []
    trials_path = None
    trace_dir = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        trials_path = out_dir / "trials.csv"
        if trials_path.exists():
            old_hash, old = read_csv(trials_path)
            if old_hash != spec_hash:
                raise SpecError(f"{trials_path} was written by spec {old_hash or '?'}, not {spec_hash}; "
                                "use a fresh output directory")
            for r in old:
                r = _parse_trial(r)
                done[(r["series"], r["value"], r["scheme"], r["trial"])] = r
        else:
            trials_path.write_text(_header(spec_hash) + ",".join(TRIAL_COLUMNS) + "\n", encoding="utf-8")
        if spec.output.traces:
            trace_dir = out_dir / "traces"
            trace_dir.mkdir(exist_ok=True)
        (out_dir / "spec.yaml").write_text(f"# spec_hash={spec_hash}\n" + dump_spec(spec), encoding="utf-8")

    tags = schemes(spec)
    pending = [(i, pt, t) for i, pt, t in _tasks(spec)
               if not all((pt.series, pt.value, s, t) in done for s in tags)]

    def record(rows):
        for r in rows:
            timing.append({k: r[k] for k in ("series", "value", "scheme", "trial", "runtime")})
            # keep exactly what is persisted so summaries recompute from the file
            r = _parse_trial({c: _fmt(r[c]) for c in TRIAL_COLUMNS})
            done[(r["series"], r["value"], r["scheme"], r["trial"])] = r
            if trials_path is not None:
                with open(trials_path, "a", encoding="utf-8", newline="") as fh:
                    csv.writer(fh, lineterminator="\n").writerow([_fmt(r[c]) for c in TRIAL_COLUMNS])
        if progress:
            progress(rows)

    td = str(trace_dir) if trace_dir else None
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(run_trial, spec, pt, t, td) for _, pt, t in pending]
            for f in as_completed(futs):
                record(f.result())
    else:
        for _, pt, t in pending:
            record(run_trial(spec, pt, t, td))

    order = {(p.series, p.value): i for i, p in enumerate(sweep_points(spec))}
    rows = sorted(done.values(), key=lambda r: (order.get((r["series"], r["value"]), 1e9),
                                                tags.index(r["scheme"]) if r["scheme"] in tags else 99,
                                                r["trial"]))
    summary = summarize(rows, spec)
    failures = sum(r["status"] != "ok" for r in rows)
    if out_dir is not None:
        emit_csv(rows, trials_path, TRIAL_COLUMNS, spec_hash)
        emit_csv(summary, out_dir / "summary.csv", SUMMARY_COLUMNS, spec_hash)
        if timing:
            tpath = out_dir / "timing.csv"
            new = not tpath.exists()
            with open(tpath, "a", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                if new:
                    fh.write(_header(spec_hash))
                    w.writerow(["series", "value", "scheme", "trial", "runtime_s"])
                for t in timing:
                    w.writerow([t["series"], _fmt(t["value"]), t["scheme"], t["trial"], f"{t['runtime']:.3f}"])
        meta = {"spec_hash": spec_hash, "name": spec.name, "points": [dataclasses.asdict(p) for p in
                                                                       sweep_points(spec)],
                "grid_note": PRESET_NOTES.get(spec.name, "user-defined grid")}
        (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunOutcome(spec_hash, rows, summary, failures, out_dir)


def _require_axis(spec, axis, what):
    if spec.sweep.axis != axis:
        raise SpecError(f"{what} needs sweep.axis = {axis}")


def run_fig2a(spec: ExperimentSpec, **kw) -> RunOutcome:
    """RHS against phased subarrays of equal cost and equal consumed power."""
    _require_axis(spec, "cost_budget", "run_fig2a")
    if not spec.baseline.enabled:
        spec = dataclasses.replace(spec, baseline=dataclasses.replace(spec.baseline, enabled=True))
    return run_experiment(spec, **kw)


def run_fig2b(spec: ExperimentSpec, **kw) -> RunOutcome:
    """Worst-case SINR against the number of transmit subarrays, one curve per n_rx."""
    _require_axis(spec, "n_tx", "run_fig2b")
    return run_experiment(spec, **kw)


def run_fig2c(spec: ExperimentSpec, **kw) -> RunOutcome:
    """Worst-case SINR against the number of receive subarrays at fixed total element count."""
    _require_axis(spec, "n_rx", "run_fig2c")
    return run_experiment(spec, **kw)


# -- presets ---------------------------------------------------------------------

PRESET_NOTES = {
    "fig2a": "desk grid: cost per subarray 20/30/40 (RHS elements at delta=10), P=Q=2; phased counts "
             "rounded up when delta does not divide the RHS count",
    "fig2b": "desk grid: P=1..4 for Q=1,2 with 16 elements per subarray, aspect-dependent RCS",
    "fig2c": "N_sum 60 and 120 split over P=2 and Q=1..4, aspect-dependent RCS",
}


def preset(name: str, trials: int | None = None, seed: int = 0) -> ExperimentSpec:
    draoa = DraoaConfig(recombine=True)
    if name == "fig2a":
        spec = ExperimentSpec(name="fig2a", seed=seed, trials=20,
                              sweep=SweepConfig("cost_budget", [20, 30, 40]), draoa=draoa,
                              baseline=BaselineConfig(enabled=True))
    elif name == "fig2b":
        spec = ExperimentSpec(name="fig2b", seed=seed, trials=20,
                              scenario=ScenarioConfig(n_per_panel=16, rcs_fluctuation="exponential"),
                              sweep=SweepConfig("n_tx", [1, 2, 3, 4], [1, 2]), draoa=draoa)
    elif name == "fig2c":
        spec = ExperimentSpec(name="fig2c", seed=seed, trials=20,
                              scenario=ScenarioConfig(rcs_fluctuation="exponential"),
                              sweep=SweepConfig("n_rx", [1, 2, 3, 4], [60, 120]), draoa=draoa)
    else:
        raise SpecError(f"unknown preset {name!r}")
    if trials is not None:
        spec.trials = trials
    return spec.validate()


def curve(summary: list, series: str, scheme: str = "rhs") -> tuple:
    """(values, mean dB) of one curve from summary rows."""
    rs = [r for r in summary if r["series"] == series and r["scheme"] == scheme]
    return np.array([r["value"] for r in rs]), np.array([r["sinr_db_mean"] for r in rs])

