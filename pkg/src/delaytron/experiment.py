"""Sweep driver: gamma x seed grid, per-round CSVs, summary CSV and plot."""
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import multiprocessing as mp
import numpy as np
import polars as pl

from .config import SYNTHETIC, RunConfig, dump_config
from .datasets import Dataset, SyntheticSpec, gen_synthetic, load_csv, normalize
from .delays import DelaySchedule, make_schedule
from .errors import ConfigError
from .learners import LearnerConfig, run, theoretical_step_size
from .metrics import RunMetrics, seed_summary
from .plot import emit_plot
from .rng import rng_stream

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("algorithm", "gamma", "eta", "max_delay", "rounds", "seeds",
                   "mean_final_error", "std_final_error", "best")


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset in SYNTHETIC:
        noise = 0.05 if cfg.dataset == "synnonsep" else 0.0
        spec = SyntheticSpec(num_samples=cfg.dataset_size, noise_rate=noise, seed=cfg.dataset_seed)
        data = gen_synthetic(spec, rng_stream(cfg.dataset_seed, "data"))
    else:
        data = load_csv(cfg.dataset, has_header=cfg.csv_header, label_column=cfg.label_column)
    return normalize(data, cfg.normalization)


def make_run_schedule(cfg: RunConfig, T: int, seed: int) -> DelaySchedule:
    if cfg.delay_mode == "file":
        return make_schedule("file", T, path=cfg.delay_file)
    return make_schedule(cfg.delay_mode, T, cfg.max_delay, rng_stream(seed, "delays"))


def resolve_eta(cfg: RunConfig, gamma: float, data: Dataset, T: int) -> float:
    if not cfg.eta.startswith("theoretical:"):
        return float(cfg.eta)
    return theoretical_step_size(
        cfg.eta.split(":", 1)[1], cfg.eta_w_norm, data.num_classes, data.stats.max_norm,
        gamma, T, cfg.eta_sum_delays or 0.0, cfg.eta_num_missing, cfg.eta_loss_bound)


def run_csv_name(cfg: RunConfig, gamma: float, seed: int) -> str:
    return f"{cfg.algorithm}_D{cfg.max_delay}_g{gamma!r}_s{seed}.csv"


def write_round_csv(metrics: RunMetrics, path) -> None:
    pl.DataFrame(metrics.columns()).write_csv(path)


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    eta: float
    final_errors: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return seed_summary(self.final_errors)[0]

    @property
    def std(self) -> float:
        return seed_summary(self.final_errors)[1]


def best_gamma(rows: List[SweepRow]) -> float:
    """Gamma with the smallest mean final error; ties go to the smaller gamma."""
    return min(rows, key=lambda r: (r.mean, r.gamma)).gamma


# worker-global dataset, installed once per process
_SHARED: Dict[str, object] = {}


def _init_worker(data, cfg):
    _SHARED["data"], _SHARED["cfg"] = data, cfg


def _one_run(job):
    gamma, eta, seed, out_path = job
    data, cfg = _SHARED["data"], _SHARED["cfg"]
    T = cfg.rounds or len(data)
    schedule = make_run_schedule(cfg, T, seed)
    res = run(LearnerConfig(cfg.algorithm, gamma, eta, seed, cfg.eta_scale), data, schedule)
    if out_path is not None:
        write_round_csv(res.metrics, out_path)
    return res.metrics.final_error, (res.metrics.error_rate if out_path is None else None)


def sweep(cfg: RunConfig, data: Optional[Dataset] = None, out_dir: Optional[Path] = None):
    """Run every (gamma, seed) pair; returns sweep rows and mean error curves.

    With ``out_dir`` each run writes its per-round CSV there.
    """
    data = data if data is not None else load_dataset(cfg)
    T = cfg.rounds or len(data)
    if T > len(data):
        raise ConfigError(f"rounds={T} exceeds dataset size {len(data)}")
    seeds = [cfg.base_seed + i for i in range(cfg.seeds)]
    jobs = []
    for g in cfg.gamma:
        eta = resolve_eta(cfg, g, data, T)
        for s in seeds:
            jobs.append((g, eta, s, None if out_dir is None else out_dir / run_csv_name(cfg, g, s)))

    # spawn rather than fork: polars keeps a live thread pool in the parent
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers, mp_context=mp.get_context("spawn"),
                                 initializer=_init_worker, initargs=(data, cfg)) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        _init_worker(data, cfg)
        results = [_one_run(j) for j in jobs]

    rows, curves = [], {}
    for i, g in enumerate(cfg.gamma):
        chunk = results[i * len(seeds):(i + 1) * len(seeds)]
        rows.append(SweepRow(g, jobs[i * len(seeds)][1], tuple(r[0] for r in chunk)))
        if out_dir is None:
            curves[g] = np.mean([r[1] for r in chunk], axis=0)
    return rows, curves


def write_summary(cfg: RunConfig, rows: List[SweepRow], T: int, path) -> None:
    best = best_gamma(rows)
    lines = [",".join(SUMMARY_COLUMNS)]
    for r in rows:
        lines.append(",".join([cfg.algorithm, repr(r.gamma), repr(r.eta), str(cfg.max_delay),
                               str(T), str(len(r.final_errors)), repr(r.mean), repr(r.std),
                               "1" if r.gamma == best else "0"]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(path) -> pl.DataFrame:
    return pl.read_csv(path)


def run_experiment(cfg: RunConfig) -> Dict[str, object]:
    """Execute the sweep described by ``cfg`` and write its artifacts.

    Layout under ``cfg.out``: ``runs/<algo>_D<D>_g<gamma>_s<seed>.csv``,
    ``summary.csv``, ``metadata.txt`` and, if enabled, ``error_rate.svg``
    (mean error curve per gamma). Anything written is removed again if the
    sweep fails part-way.
    """
    cfg.validate()
    out = Path(cfg.out)
    runs_dir = out / "runs"
    created_out = not out.exists()
    created_runs = not runs_dir.exists()
    runs_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    try:
        data = load_dataset(cfg)
        T = cfg.rounds or len(data)
        expected = [runs_dir / run_csv_name(cfg, g, cfg.base_seed + i)
                    for g in cfg.gamma for i in range(cfg.seeds)]
        written.extend(expected)
        rows, _ = sweep(cfg, data, runs_dir)

        summary = out / "summary.csv"
        written.append(summary)
        write_summary(cfg, rows, T, summary)

        meta = out / "metadata.txt"
        written.append(meta)
        stats = data.stats
        meta.write_text(dump_config(cfg).replace(f"out = {cfg.out}\n", "")
                        .replace(f"workers = {cfg.workers}\n", "")
                        + f"dataset_name = {data.name}\nnum_examples = {stats.num_examples}\n"
                          f"num_classes = {stats.num_classes}\nnum_features = {stats.num_features}\n"
                          f"max_norm = {stats.max_norm!r}\nbest_gamma = {best_gamma(rows)!r}\n")

        svg = None
        if cfg.plot:
            svg = out / "error_rate.svg"
            written.append(svg)
            series = []
            for g in cfg.gamma:
                err = np.mean([pl.read_csv(runs_dir / run_csv_name(cfg, g, cfg.base_seed + i),
                                           columns=["error_rate"])["error_rate"].to_numpy()
                               for i in range(cfg.seeds)], axis=0)
                series.append((f"gamma={g!r}", np.arange(1, T + 1), err))
            emit_plot(series, svg, title=f"{cfg.algorithm} D={cfg.max_delay}")
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_runs:
            shutil.rmtree(runs_dir, ignore_errors=True)
        if created_out:
            shutil.rmtree(out, ignore_errors=True)
        raise
    log.info("wrote %d run files to %s", len(cfg.gamma) * cfg.seeds, runs_dir)
    return {"rows": rows, "best_gamma": best_gamma(rows), "summary": summary,
            "runs_dir": runs_dir, "svg": svg}
