"""Batch experiments: instances x algorithms, CSV traces, summary tables."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml

from .algorithms import (ALGORITHMS, DEFAULT_BONUS_SCALE, DEFAULT_DELTA, DEFAULT_WIDTH_SCALE,
                         AlgorithmKind, ConfidenceSpec, run_episode)
from .chart import emit_regret_chart
from .core import RegretTrace
from .environment import derive_seed, generate_instance, save_instance
from .optimizer import TerminationRule

log = logging.getLogger(__name__)

TRACE_HEADER = ["t", "arm", "nsw_t", "cum_regret"]
SUMMARY_HEADER = ["n_agents", "n_arms", "algorithm", "checkpoint_t", "mean_regret", "std_regret",
                  "mean_opt_nsw", "std_opt_nsw", "instances"]
LABEL_INSTANCE = 1
LABEL_EPISODE = 2


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    sizes: list = field(default_factory=lambda: [(4, 2)])
    horizon: int = 10_000
    instance_count: int = 10
    algorithms: list = field(default_factory=lambda: [AlgorithmKind("fair-ucb"), AlgorithmKind("baseline-ucb")])
    delta: float = DEFAULT_DELTA
    width_scale: float = DEFAULT_WIDTH_SCALE
    anytime: bool = False
    master_seed: int = 0
    output_dir: str = "results"
    checkpoint_every: int = 100
    checkpoints: list = field(default_factory=lambda: [200_000, 500_000])
    workers: int = 1
    charts: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.sizes = [(int(n), int(k)) for n, k in self.sizes]
        except (TypeError, ValueError):
            raise ConfigError("sizes", "expected a list of (N, K) pairs") from None
        if not self.sizes or any(n < 1 or k < 1 for n, k in self.sizes):
            raise ConfigError("sizes", "need at least one (N, K) pair with N, K >= 1")
        if int(self.horizon) < 1:
            raise ConfigError("horizon", "must be at least 1")
        if int(self.instance_count) < 1:
            raise ConfigError("instance_count", "must be at least 1")
        if not self.algorithms:
            raise ConfigError("algorithms", "need at least one algorithm")
        if not 0.0 < float(self.delta) < 1.0:
            raise ConfigError("delta", "must lie in (0, 1)")
        if not float(self.width_scale) > 0.0:
            raise ConfigError("width_scale", "must be positive")
        if int(self.checkpoint_every) < 1:
            raise ConfigError("checkpoint_every", "must be at least 1")
        if int(self.workers) < 1:
            raise ConfigError("workers", "must be at least 1")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigError("algorithms", "each algorithm may appear once")

    def checkpoint_rounds(self) -> list[int]:
        pts = sorted({int(c) for c in self.checkpoints if 1 <= int(c) <= self.horizon} | {int(self.horizon)})
        return pts

    @property
    def spec(self) -> ConfidenceSpec:
        return ConfidenceSpec(self.delta, self.horizon, self.anytime, self.width_scale)


def parse_algorithm(entry, bonus_scale: float = DEFAULT_BONUS_SCALE) -> AlgorithmKind:
    """Build an AlgorithmKind from a name or a mapping of its fields."""
    if isinstance(entry, AlgorithmKind):
        return entry
    if isinstance(entry, str):
        entry = {"name": entry.strip()}
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError("algorithms", f"cannot parse {entry!r}")
    params = dict(entry)
    params.setdefault("bonus_scale", bonus_scale)
    if isinstance(params.get("rule"), dict):
        try:
            params["rule"] = TerminationRule(**params["rule"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("algorithms.rule", str(exc)) from None
    try:
        return AlgorithmKind(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError("algorithms", str(exc)) from None


def load_config_file(path) -> dict:
    """YAML or JSON mapping of ExperimentConfig fields."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError("config", str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data


def config_from_mapping(data: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__) | {"bonus_scale"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config field")
    data = dict(data)
    bonus = float(data.pop("bonus_scale", DEFAULT_BONUS_SCALE))
    if "algorithms" in data:
        data["algorithms"] = [parse_algorithm(a, bonus) for a in data["algorithms"]]
    else:
        data["algorithms"] = [parse_algorithm(a, bonus) for a in ("fair-ucb", "baseline-ucb")]
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None


class TraceTable(NamedTuple):
    """A persisted trace read back from CSV (arms 1-based)."""

    rounds: np.ndarray
    arms: np.ndarray
    nsw: np.ndarray
    cum_regret: np.ndarray
    algorithm: str

    def regret_at(self, t: int) -> float:
        idx = np.searchsorted(self.rounds, t)
        if idx >= len(self.rounds) or self.rounds[idx] != t:
            raise KeyError(f"round {t} was not persisted")
        return float(self.cum_regret[idx])


def persisted_rounds(horizon: int, stride: int, checkpoints=()) -> np.ndarray:
    rounds = set(range(stride, horizon + 1, stride)) | {horizon} | {c for c in checkpoints if 1 <= c <= horizon}
    return np.array(sorted(rounds), dtype=np.int64)


def write_trace_csv(trace: RegretTrace, path, stride: int = 100, checkpoints=()) -> None:
    rounds = persisted_rounds(trace.horizon, stride, checkpoints)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t in rounds:
            i = t - 1
            w.writerow([int(t), int(trace.arms[i]) + 1, repr(float(trace.nsw[i])), repr(float(trace.cum_regret[i]))])


def read_trace_csv(path, algorithm: str | None = None) -> TraceTable:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(r)
    arr = np.array(rows, dtype=object)
    if algorithm is None:
        algorithm = Path(path).stem.split("_", 1)[-1]
    if len(rows) == 0:
        empty = np.empty(0)
        return TraceTable(empty.astype(np.int64), empty.astype(np.int64), empty, empty, algorithm)
    return TraceTable(arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64),
                      arr[:, 2].astype(np.float64), arr[:, 3].astype(np.float64), algorithm)


def mean_std(values) -> tuple[float, float]:
    """Order-independent mean and sample standard deviation (0 for one value)."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (n - 1))


def summarize(results: list[dict], checkpoints: list[int]) -> list[dict]:
    """Aggregate per-run rows (n, k, algorithm, instance, opt_nsw, regrets) into summary rows."""
    groups: dict = {}
    for res in results:
        groups.setdefault((res["n_agents"], res["n_arms"], res["algorithm"]), []).append(res)
    rows = []
    for (n, k, algo), runs in groups.items():
        opt_mean, opt_std = mean_std(r["opt_nsw"] for r in runs)
        for c in checkpoints:
            m, s = mean_std(r["regrets"][c] for r in runs)
            rows.append(dict(n_agents=n, n_arms=k, algorithm=algo, checkpoint_t=c, mean_regret=m,
                             std_regret=s, mean_opt_nsw=opt_mean, std_opt_nsw=opt_std,
                             instances=len(runs)))
    rows.sort(key=lambda r: (r["n_agents"], r["n_arms"], r["algorithm"], r["checkpoint_t"]))
    return rows


def write_summary_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow([r["n_agents"], r["n_arms"], r["algorithm"], r["checkpoint_t"],
                        repr(float(r["mean_regret"])), repr(float(r["std_regret"])),
                        repr(float(r["mean_opt_nsw"])), repr(float(r["std_opt_nsw"])), r["instances"]])


def read_summary_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append(dict(n_agents=int(r["n_agents"]), n_arms=int(r["n_arms"]), algorithm=r["algorithm"],
                        checkpoint_t=int(r["checkpoint_t"]), mean_regret=float(r["mean_regret"]),
                        std_regret=float(r["std_regret"]), mean_opt_nsw=float(r["mean_opt_nsw"]),
                        std_opt_nsw=float(r["std_opt_nsw"]), instances=int(r["instances"])))
    return out


def trace_path(out: Path, n: int, k: int, index: int, algo: str) -> Path:
    return out / "traces" / f"n{n}_k{k}" / f"instance{index:03d}_{algo}.csv"


def _algo_label(kind: AlgorithmKind) -> int:
    return ALGORITHMS.index(kind.name)


def _episode_job(args):
    n, k, index, kind, cfg_spec, horizon, master_seed, out_dir, stride, checkpoints, keep = args
    inst = generate_instance(n, k, derive_seed(master_seed, LABEL_INSTANCE, n, k, index))
    seed = derive_seed(master_seed, LABEL_EPISODE, n, k, index, _algo_label(kind))
    trace = run_episode(kind, inst, horizon, cfg_spec, seed)
    path = trace_path(Path(out_dir), n, k, index, kind.name)
    write_trace_csv(trace, path, stride, checkpoints)
    result = dict(n_agents=n, n_arms=k, algorithm=kind.name, instance=index, opt_nsw=inst.opt_nsw,
                  regrets={c: trace.regret_at(c) for c in checkpoints}, trace_file=str(path))
    return result, (trace if keep else None)


def run_batch(config: ExperimentConfig) -> list[dict]:
    """Run every (size, instance, algorithm) episode and write all artifacts.

    Layout under ``output_dir``: ``instances/``, ``traces/n{N}_k{K}/``,
    ``charts/`` and ``summary.csv``. Returns the summary rows.
    """
    config.validate()
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "instances").mkdir(exist_ok=True)
        for n, k in config.sizes:
            (out / "traces" / f"n{n}_k{k}").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {out}: {exc}") from None

    checkpoints = config.checkpoint_rounds()
    for n, k in config.sizes:
        for i in range(config.instance_count):
            inst = generate_instance(n, k, derive_seed(config.master_seed, LABEL_INSTANCE, n, k, i))
            save_instance(inst, out / "instances" / f"n{n}_k{k}_instance{i:03d}.txt")

    jobs = [(n, k, i, kind, config.spec, config.horizon, config.master_seed, str(out),
             config.checkpoint_every, checkpoints, config.charts and i == 0)
            for n, k in config.sizes for i in range(config.instance_count) for kind in config.algorithms]
    log.info("running %d episodes on %d worker(s)", len(jobs), config.workers)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(_episode_job, jobs))
    else:
        outcomes = [_episode_job(j) for j in jobs]

    results = [r for r, _ in outcomes]
    if config.charts:
        by_size: dict = {}
        for r, tr in outcomes:
            if tr is not None:
                by_size.setdefault((r["n_agents"], r["n_arms"]), []).append(tr)
        for (n, k), traces in by_size.items():
            emit_regret_chart(traces, out / "charts" / f"n{n}_k{k}_instance000.svg",
                              title=f"Cumulative regret, N={n}, K={k}")

    rows = summarize(results, checkpoints)
    write_summary_csv(rows, out / "summary.csv")
    manifest = {k: v for k, v in asdict(config).items() if k != "algorithms"}
    manifest["algorithms"] = [dict(asdict(a), rule=asdict(a.rule)) for a in config.algorithms]
    (out / "config.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return rows


def summary_from_traces(out_dir, checkpoints: list[int]) -> list[dict]:
    """Recompute the summary from persisted trace CSVs and instance files."""
    from .environment import load_instance

    out = Path(out_dir)
    results = []
    for path in sorted((out / "traces").glob("n*_k*/instance*_*.csv")):
        size = path.parent.name
        n, k = (int(x[1:]) for x in size.split("_"))
        stem = path.stem
        index = int(stem.split("_", 1)[0].removeprefix("instance"))
        algo = stem.split("_", 1)[1]
        table = read_trace_csv(path, algo)
        inst = load_instance(out / "instances" / f"{size}_instance{index:03d}.txt")
        results.append(dict(n_agents=n, n_arms=k, algorithm=algo, instance=index, opt_nsw=inst.opt_nsw,
                            regrets={c: table.regret_at(c) for c in checkpoints}))
    return summarize(results, checkpoints)
