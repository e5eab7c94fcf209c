"""Monte-Carlo amplitude sweeps over exploration modes and estimation methods."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from sensodim.bootstrap import BootstrapParams, Strategy, run_bootstrap
from sensodim.cca import CcaParams, estimate_dim_cca
from sensodim.estimators import Method, displacement_dim, estimate_dim_linear
from sensodim.sim import ExplorationMode, SystemSpec, build_system, explore, sample_configurations

log = logging.getLogger(__name__)

PAPER_AMPLITUDES = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1)
DESK_TRIALS = 20
PAPER_TRIALS = 100
MODE_LETTER = {ExplorationMode.AGENT: "m", ExplorationMode.ENVIRONMENT: "e", ExplorationMode.BOTH: "b"}


@dataclass(frozen=True)
class ExperimentPlan:
    amplitudes: tuple[float, ...] = PAPER_AMPLITUDES
    modes: tuple[ExplorationMode, ...] = tuple(ExplorationMode)
    methods: tuple[Method, ...] = tuple(Method)
    trials: int = DESK_TRIALS
    n_moves: int = 1000
    p_max: int = 15
    n_sources: int = 3
    boot_iters: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("ExperimentPlan.trials must be >= 1")
        if not self.amplitudes:
            raise ValueError("ExperimentPlan.amplitudes must not be empty")
        if any(not a > 0 for a in self.amplitudes):
            raise ValueError("ExperimentPlan.amplitudes must be positive")
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        object.__setattr__(self, "modes", tuple(ExplorationMode.parse(m) for m in self.modes))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown plan fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["amplitudes"] = list(self.amplitudes)
        d["modes"] = [m.value for m in self.modes]
        d["methods"] = [m.value for m in self.methods]
        return d


def load_plan(path: str | Path) -> ExperimentPlan:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    return ExperimentPlan.from_dict(data)


def ground_truth(mode: ExplorationMode | str, n_sources: int = 3) -> int:
    """Correct intrinsic dimension for a mode: agent 9, environment 2*n_sources, both 9 + 2*n_sources - 3."""
    if n_sources < 1:
        raise ValueError("n_sources must be >= 1")
    mode = ExplorationMode.parse(mode)
    if mode is ExplorationMode.AGENT:
        return 9
    if mode is ExplorationMode.ENVIRONMENT:
        return 2 * n_sources
    return 9 + 2 * n_sources - 3  # head rotations are the compensable displacements


def derive_seed(master_seed: int, *key: object) -> int:
    h = hashlib.sha256(("/".join([str(master_seed), *map(str, key)])).encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


@dataclass
class TrialRecord:
    trial: int
    amplitude: float
    mode: str
    method: str
    estimate: int | None
    truth: int
    correct: bool
    diagnostics: list[float] = field(default_factory=list)
    error: str | None = None
    wall_time: float = 0.0

    def key(self) -> tuple:
        return (self.amplitude, self.mode, self.method, self.trial)

    def to_json(self) -> str:
        """Canonical JSON line without timing, so reruns compare byte for byte."""
        d = asdict(self)
        d.pop("wall_time")
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        return cls(**json.loads(line))


@dataclass(frozen=True)
class Cell:
    amp_index: int
    mode: ExplorationMode
    method: Method
    trial: int


def _cells(plan: ExperimentPlan) -> list[Cell]:
    return [
        Cell(a, mode, method, t)
        for a in range(len(plan.amplitudes))
        for mode in plan.modes
        for method in plan.methods
        for t in range(plan.trials)
    ]


def run_cell(plan: ExperimentPlan, cell: Cell) -> TrialRecord:
    """Run one (amplitude, mode, method, trial) cell from scratch.

    The System depends only on (amplitude index, trial), the exploration
    additionally on the mode, and CCA initialisation on the method too.
    """
    amp = plan.amplitudes[cell.amp_index]
    truth = ground_truth(cell.mode, plan.n_sources)
    rec = TrialRecord(cell.trial, amp, cell.mode.value, cell.method.value, None, truth, False)
    t0 = time.perf_counter()
    try:
        system = build_system(SystemSpec(n_sources=plan.n_sources,
                                         seed=derive_seed(plan.master_seed, "system", cell.amp_index, cell.trial)))
        explore_seed = derive_seed(plan.master_seed, "explore", cell.amp_index, cell.mode.value, cell.trial)
        cca_params = CcaParams(seed=derive_seed(plan.master_seed, "cca", cell.amp_index, cell.mode.value,
                                                cell.method.value, cell.trial))
        if cell.method in (Method.LINEAR, Method.CCA):
            configs = sample_configurations(system, cell.mode, amp, plan.n_moves, explore_seed)
            data = explore(system, configs, cell.mode, amp)
        else:
            strategy = Strategy.INFINITESIMAL if cell.method is Method.CCA_BOOT_INFINITESIMAL else Strategy.FINITE
            params = BootstrapParams(iterations=plan.boot_iters, strategy=strategy, target_amplitude=amp)
            data = run_bootstrap(system, cell.mode, params, plan.n_moves, explore_seed).variations
        if cell.method is Method.LINEAR:
            est = estimate_dim_linear(data)
            rec.diagnostics = [float(x) for x in est.diagnostics[: plan.p_max + 1]]
        else:
            est = estimate_dim_cca(data, plan.p_max, cca_params, cell.method)
            rec.diagnostics = [float(x) for x in est.diagnostics.as_array()]
        rec.estimate = int(est.value)
        rec.correct = rec.estimate == truth
    except Exception as exc:  # recorded, never aborts the sweep
        log.warning("cell %s failed: %s", cell, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.wall_time = time.perf_counter() - t0
    return rec


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(plan: ExperimentPlan, workers: int = 1, progress=None) -> list[TrialRecord]:
    """All cells of the plan, in canonical order whatever the worker count."""
    cells = _cells(plan)
    if workers <= 1:
        records = []
        for c in cells:
            records.append(run_cell(plan, c))
            if progress:
                progress(records[-1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = []
            for r in pool.map(_run_cell_args, [(plan, c) for c in cells], chunksize=1):
                records.append(r)
                if progress:
                    progress(r)
    return sorted(records, key=_record_order(plan))


def _record_order(plan: ExperimentPlan):
    modes = [m.value for m in plan.modes]
    methods = [m.value for m in plan.methods]
    return lambda r: (plan.amplitudes.index(r.amplitude), modes.index(r.mode), methods.index(r.method), r.trial)


def write_records(records: Iterable[TrialRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records(path: str | Path) -> list[TrialRecord]:
    with open(path) as fh:
        return [TrialRecord.from_json(line) for line in fh if line.strip()]


def write_timings(records: Iterable[TrialRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["amplitude", "mode", "method", "trial", "wall_time"])
        for r in records:
            w.writerow([r.amplitude, r.mode, r.method, r.trial, f"{r.wall_time:.3f}"])


@dataclass(frozen=True)
class SummaryRow:
    amplitude: float
    mode: str
    method: str
    n: int
    n_correct: int

    @property
    def percent(self) -> float:
        return 100.0 * self.n_correct / self.n


@dataclass(frozen=True)
class DerivedRow:
    amplitude: float
    method: str
    n: int  # trials with all three modes present
    n_all_correct: int
    d: int | None  # displacement dimension, emitted when m, e, b were all correct


def summarize(records: Sequence[TrialRecord]) -> tuple[list[SummaryRow], list[DerivedRow]]:
    """Success rates per (amplitude, mode, method); groups with no records are absent."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.amplitude, r.mode, r.method), []).append(r)
    rows = [SummaryRow(a, mo, me, len(rs), sum(r.correct for r in rs)) for (a, mo, me), rs in groups.items()]

    by_trial: dict[tuple, dict[str, TrialRecord]] = {}
    for r in records:
        by_trial.setdefault((r.amplitude, r.method, r.trial), {})[r.mode] = r
    derived: dict[tuple, list] = {}
    for (a, me, _), modes in by_trial.items():
        letters = {MODE_LETTER[ExplorationMode(k)]: v for k, v in modes.items()}
        if set(letters) != {"m", "e", "b"}:
            continue
        ok = all(v.correct for v in letters.values())
        d = displacement_dim(letters["m"].estimate, letters["e"].estimate, letters["b"].estimate) if ok else None
        derived.setdefault((a, me), []).append((ok, d))
    drows = []
    for (a, me), items in derived.items():
        ds = {d for ok, d in items if ok}
        drows.append(DerivedRow(a, me, len(items), sum(ok for ok, _ in items), ds.pop() if len(ds) == 1 else None))
    return rows, drows


def write_summary(rows: Sequence[SummaryRow], derived: Sequence[DerivedRow], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["amplitude", "mode", "method", "n", "n_correct", "percent_correct"])
        for r in rows:
            w.writerow([r.amplitude, r.mode, r.method, r.n, r.n_correct, f"{r.percent:.1f}"])
    with open(out / "derived_d.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["amplitude", "method", "n", "n_all_correct", "d"])
        for r in derived:
            w.writerow([r.amplitude, r.method, r.n, r.n_all_correct, "" if r.d is None else r.d])
    payload = {
        "rates": [{**asdict(r), "percent_correct": r.percent} for r in rows],
        "derived_d": [asdict(r) for r in derived],
    }
    (out / "summary.json").write_text(json.dumps(payload, indent=1))


def read_summary(path: str | Path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        return [SummaryRow(float(r["amplitude"]), r["mode"], r["method"], int(r["n"]), int(r["n_correct"]))
                for r in csv.DictReader(fh)]


def rate_table(rows: Sequence[SummaryRow]) -> dict[tuple, float]:
    """Mapping (amplitude, mode, method) -> percent correct."""
    return {(r.amplitude, r.mode, r.method): r.percent for r in rows}


def emit_plot_data(rows: Sequence[SummaryRow], out_dir: str | Path) -> list[Path]:
    """Per-mode CSV (amplitude x method) and SVG success curves on a log amplitude axis."""
    if not rows:
        raise ValueError("empty summary table: nothing to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = rate_table(rows)
    method_order = [m.value for m in Method]
    written = []
    for mode in ExplorationMode:
        mode_rows = [r for r in rows if r.mode == mode.value]
        if not mode_rows:
            continue
        amps = sorted({r.amplitude for r in mode_rows})
        methods = [m for m in method_order if any(r.method == m for r in mode_rows)]
        csv_path = out / f"performance_{mode.value}.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["amplitude", *methods])
            for a in amps:
                vals = [table.get((a, mode.value, m)) for m in methods]
                w.writerow([a, *("" if v is None else f"{v:.1f}" for v in vals)])
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for m in methods:
            pts = [(a, table[(a, mode.value, m)]) for a in amps if (a, mode.value, m) in table]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=m)
        ax.set_xscale("log")
        ax.set_ylim(0, 100)
        ax.set_xlabel("maximal amplitude (deg)")
        ax.set_ylabel("% correct")
        ax.set_title(f"{MODE_LETTER[mode]} ({mode.value})")
        ax.legend(fontsize=7)
        fig.tight_layout()
        svg_path = out / f"performance_{mode.value}.svg"
        fig.savefig(svg_path)
        plt.close(fig)
        written += [csv_path, svg_path]
    return written


def run_directory(base: str | Path, master_seed: int) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = Path(base) / f"{stamp}_seed{master_seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def with_overrides(plan: ExperimentPlan, **overrides) -> ExperimentPlan:
    return replace(plan, **{k: v for k, v in overrides.items() if v is not None})
