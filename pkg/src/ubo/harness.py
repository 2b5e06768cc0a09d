"""Seeded BO vs UBO experiments on the synthetic benchmarks.

Each run records, after the initial design and after every iteration, the
incumbent and Monte Carlo robustness statistics of the objective around it.
Runs are aggregated per (mode, iteration) and written as CSV.
"""

import csv
import dataclasses
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .benchfns import get_function, robustness_eval
from .driver import Mode, OptimizerConfig, run_optimization
from .gp import DEFAULT_OBSERVATION_NOISE
from .mcmc import SliceSamplerConfig
from .unscented import DEFAULT_K, InputNoise

log = logging.getLogger(__name__)

METRICS = ("mean_outcome", "std_outcome", "worst_outcome")

AGGREGATE_HEADER = [
    "mode", "iteration",
    "mean_outcome_avg", "mean_outcome_ci95",
    "std_outcome_avg", "std_outcome_ci95",
    "worst_outcome_avg", "worst_outcome_ci95",
]
SUMMARY_HEADER = ["mode", "runs", "mean_outcome", "worst_outcome", "std_outcome"]

# Protocol defaults per benchmark; explicit config values take precedence.
PROTOCOLS = {
    "rkhs": {"initial_samples": 5, "iterations": 45, "sigma_x": 0.01},
    "gm": {"initial_samples": 30, "iterations": 90, "sigma_x": 0.1},
}

_SAMPLER_KEYS = {
    "sampler_num_samples": "num_samples",
    "sampler_burn_in": "burn_in",
    "sampler_warm_burn_in": "warm_burn_in",
    "sampler_thinning": "thinning",
    "sampler_step_width": "initial_step_width",
    "sampler_max_step_out": "max_step_out",
    "sampler_prior_mean": "prior_mean",
    "sampler_prior_std": "prior_std",
}


def fmt(v):
    """17 significant digits: lossless float round-trip."""
    return format(float(v), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    function: str = "rkhs"
    modes: tuple = (Mode.CLASSICAL.value, Mode.UNSCENTED.value)
    runs: int = 20
    initial_samples: int = 5
    iterations: int = 45
    sigma_x: float = 0.01
    ut_k: float = DEFAULT_K
    inner_optimizer_budget: int = 1000
    observation_noise: float = DEFAULT_OBSERVATION_NOISE
    output_noise_std: float = 0.0
    mc_probes: int = 100
    base_seed: int = 0
    output_dir: str = "results"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    sampler: SliceSamplerConfig = field(default_factory=SliceSamplerConfig)

    def __post_init__(self):
        modes = self.modes
        if isinstance(modes, str):
            modes = [m.strip() for m in modes.split(",") if m.strip()]
        modes = tuple(Mode(m).value for m in modes)
        if not modes:
            raise ValueError("at least one mode is required")
        object.__setattr__(self, "modes", modes)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.mc_probes < 1:
            raise ValueError("mc_probes must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.base_seed < 0 or self.base_seed + self.runs > 2 ** 64:
            raise ValueError("seeds must be 64-bit unsigned integers")
        if self.output_noise_std < 0:
            raise ValueError("output_noise_std must be >= 0")
        InputNoise(self.sigma_x)
        get_function(self.function)
        for m in modes:
            self.optimizer_config(m, 0)  # validates the optimizer fields

    @property
    def dim(self):
        return get_function(self.function).dim

    def seed(self, run_index):
        return self.base_seed + run_index

    def optimizer_config(self, mode, run_index):
        return OptimizerConfig(
            dim=self.dim,
            initial_samples=self.initial_samples,
            iterations=self.iterations,
            input_noise=InputNoise(self.sigma_x),
            ut_k=self.ut_k,
            mode=mode,
            inner_optimizer_budget=self.inner_optimizer_budget,
            seed=self.seed(run_index),
            sampler=self.sampler,
            observation_noise=self.observation_noise,
        )

    @classmethod
    def from_mapping(cls, values):
        """Build from flat key/value settings, filling gaps from the benchmark protocol."""
        values = dict(values)
        function = str(values.get("function", "rkhs"))
        merged = dict(PROTOCOLS.get(function, {}))
        sampler = {}
        for key, v in values.items():
            if key in _SAMPLER_KEYS:
                sampler[_SAMPLER_KEYS[key]] = v
            elif key == "sampler" and isinstance(v, dict):
                sampler.update(v)
            else:
                merged[key] = v
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(merged) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if sampler:
            merged["sampler"] = SliceSamplerConfig(**sampler)
        return cls(**merged)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["modes"] = list(self.modes)
        d["seeds"] = [self.seed(i) for i in range(self.runs)]
        d["dim"] = self.dim
        return d


def parse_config_text(text):
    """Parse a JSON object or ``key = value`` lines (``#`` comments) into a dict."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = json.loads(raw)
        except json.JSONDecodeError:
            values[key] = raw
    return values


def load_config(path, overrides=None):
    values = parse_config_text(Path(path).read_text()) if path else {}
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return ExperimentConfig.from_mapping(values)


@dataclass
class RunRecord:
    run_index: int
    mode: str
    seed: int
    rows: list  # dicts: iteration, x_star, criterion_value, mean/std/worst_outcome
    wall_time: float
    objective_evaluations: int
    probe_evaluations: int
    queries: np.ndarray


class _Counted:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def run_single(cfg, mode, run_index):
    """One seeded optimization run with per-iteration robustness probes.

    Probe and output-noise draws come from streams separate from the
    optimizer's, so they never change the optimization trajectory.
    """
    seed = cfg.seed(run_index)
    base = get_function(cfg.function)
    opt_rng = np.random.default_rng(seed)
    probe_rng = np.random.default_rng([seed, 1])
    noise_rng = np.random.default_rng([seed, 2])

    objective = _Counted(base)
    probe_objective = _Counted(base)
    if cfg.output_noise_std > 0:
        def noisy(x):
            return objective(x) + cfg.output_noise_std * noise_rng.standard_normal()
        optimized = noisy
    else:
        optimized = objective

    noise = InputNoise(cfg.sigma_x)
    rows = []

    def record(report, data):
        s = robustness_eval(probe_objective, report.x_star, noise, cfg.mc_probes, probe_rng)
        rows.append({
            "iteration": report.iteration,
            "x_star": report.x_star,
            "criterion_value": report.criterion_value,
            "mean_outcome": s.mean_outcome,
            "std_outcome": s.std_outcome,
            "worst_outcome": s.worst_outcome,
        })

    t0 = time.perf_counter()
    result = run_optimization(optimized, cfg.optimizer_config(mode, run_index), opt_rng, callback=record)
    wall = time.perf_counter() - t0
    log.info("%s run %d (seed %d) done in %.1fs", mode, run_index, seed, wall)
    return RunRecord(run_index, mode, seed, rows, wall, objective.calls, probe_objective.calls,
                     np.array(result.dataset.points))


def _run_task(args):
    return run_single(*args)


def aggregate(records, modes=None):
    """Per (mode, iteration): mean over runs and 95% CI half-width 1.96 std / sqrt(R)."""
    modes = modes or sorted({r.mode for r in records})
    out = []
    for mode in modes:
        recs = sorted((r for r in records if r.mode == mode), key=lambda r: r.run_index)
        if not recs:
            continue
        R = len(recs)
        for t in range(len(recs[0].rows)):
            row = {"mode": mode, "iteration": t}
            for m in METRICS:
                v = np.array([r.rows[t][m] for r in recs])
                row[f"{m}_avg"] = float(v.mean())
                row[f"{m}_ci95"] = float(1.96 * v.std() / np.sqrt(R))
            out.append(row)
    return out


def summarize(records, modes=None):
    """Final-iteration averages per mode."""
    modes = modes or sorted({r.mode for r in records})
    out = []
    for mode in modes:
        recs = [r for r in records if r.mode == mode]
        if not recs:
            continue
        row = {"mode": mode, "runs": len(recs)}
        for m in METRICS:
            row[m] = float(np.mean([r.rows[-1][m] for r in recs]))
        out.append(row)
    return out


def accounting(cfg, records):
    """Objective-evaluation counts per mode, next to the counts the protocol implies."""
    out = []
    for mode in cfg.modes:
        recs = [r for r in records if r.mode == mode]
        out.append({
            "mode": mode,
            "runs": len(recs),
            "objective_evaluations": sum(r.objective_evaluations for r in recs),
            "expected_objective_evaluations": cfg.runs * (cfg.initial_samples + cfg.iterations),
            "probe_evaluations": sum(r.probe_evaluations for r in recs),
            "expected_probe_evaluations": cfg.runs * (cfg.iterations + 1) * cfg.mc_probes,
        })
    return out


def final_metric(records, mode, metric):
    """Final-iteration metric per run, ordered by run index."""
    recs = sorted((r for r in records if r.mode == mode), key=lambda r: r.run_index)
    return np.array([r.rows[-1][metric] for r in recs])


def paired_pvalue(a, b, alternative="greater"):
    """One-sided paired t-test p-value for ``a`` vs ``b``.

    Returns 1.0 when every difference is zero, and 0.0 or 1.0 when the
    differences are a nonzero constant.
    """
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if not np.any(diff != 0):
        return 1.0
    if np.all(diff == diff[0]):
        favoured = diff[0] > 0 if alternative == "greater" else diff[0] < 0
        return 0.0 if favoured else 1.0
    return float(stats.ttest_rel(a, b, alternative=alternative).pvalue)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    aggregate: list
    summary: list
    accounting: list


def check_output_dir(path):
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=path):
            pass
    except OSError as e:
        raise OSError(f"output directory {path} is not writable: {e}") from e


def run_experiment(cfg, write=True):
    """R runs per mode; run i of every mode uses seed base_seed + i."""
    if write:
        check_output_dir(cfg.output_dir)
    tasks = [(cfg, mode, i) for mode in cfg.modes for i in range(cfg.runs)]
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(tasks))) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    result = ExperimentResult(cfg, records, aggregate(records, cfg.modes),
                              summarize(records, cfg.modes), accounting(cfg, records))
    if write:
        emit_outputs(result, cfg.output_dir)
    return result


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def emit_outputs(result, output_dir):
    """Write runs.csv, aggregate.csv, summary.csv, accounting.csv, timing.csv and config.echo.

    Everything except timing.csv is a deterministic function of the config.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted(result.records, key=lambda r: (result.config.modes.index(r.mode), r.run_index))
    dim = result.config.dim

    header = ["mode", "run", "seed", "iteration"] + [f"x_star_{j}" for j in range(dim)] + [
        "criterion_value", *METRICS]
    rows = []
    for r in records:
        for row in r.rows:
            rows.append([r.mode, r.run_index, r.seed, row["iteration"]]
                        + [fmt(v) for v in row["x_star"]]
                        + [fmt(row["criterion_value"])] + [fmt(row[m]) for m in METRICS])
    _write_csv(out / "runs.csv", header, rows)

    _write_csv(out / "aggregate.csv", AGGREGATE_HEADER, [
        [a["mode"], a["iteration"]] + [fmt(a[k]) for k in AGGREGATE_HEADER[2:]]
        for a in result.aggregate])
    _write_csv(out / "summary.csv", SUMMARY_HEADER, [
        [s["mode"], s["runs"]] + [fmt(s[k]) for k in SUMMARY_HEADER[2:]] for s in result.summary])
    acc_header = list(result.accounting[0]) if result.accounting else ["mode"]
    _write_csv(out / "accounting.csv", acc_header, [[a[k] for k in acc_header] for a in result.accounting])
    _write_csv(out / "timing.csv", ["mode", "run", "seed", "wall_time"], [
        [r.mode, r.run_index, r.seed, f"{r.wall_time:.3f}"] for r in records])

    echo = result.config.to_dict()
    echo.pop("threads")  # execution detail; does not affect results
    try:
        (out / "config.echo").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {out / 'config.echo'}: {e}") from e
