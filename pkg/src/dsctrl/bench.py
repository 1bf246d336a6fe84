"""Batch benchmark runner and its CSV results format.

A batch is a list of problems (model files or generated instances) times a
number of starts per problem.  Every (problem, start) pair becomes one
:class:`RunRecord` and one CSV row.  Runs are independent, so they may be
spread over worker processes; records are sorted before writing, which keeps
the CSV identical for any ``jobs`` value.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import logging
from pathlib import Path
import statistics
import time

import numpy as np

from .engine import NmConfig, RestartConfig
from .generator import instance_seed, random_sof_instance
from .lti import spectral_abscissa
from .modelfile import read_model
from .objective import WORST, from_text, rank, to_text
from .shaping import (DEFAULT_FILTER_N, Envelope, build_pid_closed_loop, default_plant,
                      optimize_shaping, PidParams, ultimate_gain, zn_initial)
from .sof import Kind, SofProblem, solve_sof

log = logging.getLogger(__name__)

COLUMNS = ["problem_id", "task", "x0_kind", "seed", "f_initial", "f_final", "stabilized",
           "evals", "restarts", "wall_time_ms", "status"]
TASKS = ("stabilize", "h2", "hinf", "shape")


@dataclass(frozen=True)
class GeneratorSpec:
    count: int
    n: tuple = (2, 6)
    m: tuple = (1, 2)
    p: tuple = (1, 2)
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        for k in ("n", "m", "p"):
            v = getattr(self, k)
            v = (v, v) if isinstance(v, int) else tuple(v)
            if len(v) != 2 or not 1 <= v[0] <= v[1]:
                raise ValueError(f"bad {k} range {v}")
            object.__setattr__(self, k, v)

    def dims(self, index):
        rng = np.random.default_rng(instance_seed(self.seed, index))
        return tuple(int(rng.integers(lo, hi + 1)) for lo, hi in (self.n, self.m, self.p))

    def instance(self, index):
        n, m, p = self.dims(index)
        return random_sof_instance(instance_seed(self.seed, index).spawn(1)[0], n, m, p,
                                   name=f"gen{self.seed}_{index:04d}")


@dataclass(frozen=True)
class BenchmarkConfig:
    task: str = "stabilize"
    model_paths: tuple = ()
    generator: GeneratorSpec | None = None
    seed: int = 0
    multistart: int = 1
    max_restarts: int = 20
    restart_tol: float = 1e-6
    max_evals: int | None = None
    norm_tol: float = 1e-6
    jobs: int = 1
    timing: bool = True
    keep_trace: bool = False
    envelope: Envelope = field(default_factory=Envelope)
    filter_n: float = DEFAULT_FILTER_N
    sim_step: float | None = None
    x0: tuple | None = None  # explicit first start, overrides zero / ZN

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def nm_cfg(self):
        return NmConfig(max_evals=self.max_evals)

    @property
    def rs_cfg(self):
        return RestartConfig(restart_tol=self.restart_tol, max_restarts=self.max_restarts)


@dataclass
class RunRecord:
    problem_id: str
    task: str
    x0_kind: str
    seed: int | None
    f_initial: object
    f_final: object
    stabilized: bool
    evals: int
    restarts: int
    wall_time_ms: float
    status: str
    start_index: int = 0
    k: np.ndarray | None = None  # final decision vector / gain, not serialized
    trace: object = None
    extra: object = None

    def row(self):
        return [self.problem_id, self.task, self.x0_kind,
                "" if self.seed is None else str(self.seed),
                to_text(self.f_initial), to_text(self.f_final),
                "true" if self.stabilized else "false",
                str(self.evals), str(self.restarts), f"{self.wall_time_ms:.3f}", self.status]


def _start_seed(seed, index, start):
    return int(np.random.SeedSequence([int(seed), int(index), int(start)]).generate_state(1, np.uint64)[0])


def random_unstable_pid(plant, rng, high=20.0, tries=1000):
    """Uniform PID gains in ``[0, high]^3`` that leave the loop unstable."""
    for _ in range(tries):
        x = rng.uniform(0.0, high, size=3)
        sys = build_pid_closed_loop(plant, PidParams(*x))
        if spectral_abscissa(sys.a_cl) >= 0:
            return x
    raise ValueError("could not draw a non-stabilizing PID start")


@dataclass(frozen=True)
class Problem:
    problem_id: str
    index: int
    path: str | None = None
    builtin: bool = False

    def load(self, cfg):
        if self.builtin:
            return default_plant()
        if self.path is not None:
            return read_model(self.path)
        return cfg.generator.instance(self.index)[0]


def problems_for(cfg: BenchmarkConfig):
    probs = [Problem(Path(p).stem, i, path=str(p)) for i, p in enumerate(cfg.model_paths)]
    if cfg.generator is not None:
        off = len(probs)
        probs += [Problem(f"gen{cfg.generator.seed}_{i:04d}", off + i)
                  for i in range(cfg.generator.count)]
    if not probs and cfg.task == "shape" and cfg.generator is None:
        probs = [Problem("builtin_lag3", 0, builtin=True)]
    return probs


def _sof_start(cfg, prob, model, start):
    dim = model.m * model.p
    if start == 0:
        if cfg.x0 is not None:
            return "file", None, np.asarray(cfg.x0, dtype=float)
        return "zero", None, np.zeros(dim)
    s = _start_seed(cfg.seed, prob.index, start)
    return "random", s, np.random.default_rng(s).uniform(-1.0, 1.0, dim)


def _shape_start(cfg, prob, plant, start):
    if start == 0:
        if cfg.x0 is not None:
            return "file", None, np.asarray(cfg.x0, dtype=float)
        try:
            ku, tu = ultimate_gain(plant)
            return "zn", None, zn_initial(ku, tu, cfg.filter_n).x
        except ValueError:
            return "zero", None, np.zeros(3)
    s = _start_seed(cfg.seed, prob.index, start)
    return "random", s, random_unstable_pid(plant, np.random.default_rng(s))


def _run_args(args):
    return run_start(*args)


def run_start(cfg: BenchmarkConfig, prob: Problem, start: int) -> RunRecord:
    """Run one start of one problem; failures become a record with an error status."""
    kind, seed = "zero", None
    try:
        model = prob.load(cfg)
        if cfg.task == "shape":
            kind, seed, x0 = _shape_start(cfg, prob, model, start)
            t0 = time.perf_counter()
            run = optimize_shaping(model, cfg.envelope, x0, cfg.nm_cfg, cfg.rs_cfg,
                                   cfg.filter_n, cfg.sim_step)
            wall = time.perf_counter() - t0
            sys = build_pid_closed_loop(model, run.pid)
            stable = spectral_abscissa(sys.a_cl) < 0
            ok = run.outcome.f <= run.initial.f
            return RunRecord(prob.problem_id, cfg.task, kind, seed, run.initial.f, run.outcome.f,
                             stable, run.evals, run.restarts, wall * 1e3 if cfg.timing else 0.0,
                             "ok" if ok else "failed", start, k=run.pid.x,
                             extra=run if cfg.keep_trace else None)
        kind, seed, x0 = _sof_start(cfg, prob, model, start)
        problem = SofProblem(model, Kind(cfg.task), cfg.norm_tol)
        res = solve_sof(problem, x0, cfg.nm_cfg, cfg.rs_cfg, keep_trace=cfg.keep_trace)
        return RunRecord(prob.problem_id, cfg.task, kind, seed, res.f_initial, res.objective,
                         res.stabilized, res.evals, res.restarts,
                         res.wall_time * 1e3 if cfg.timing else 0.0,
                         "ok" if res.stabilized else "failed", start, k=res.k, trace=res.trace)
    except Exception as exc:  # a failing problem must not abort the batch
        log.warning("%s start %d failed: %r", prob.problem_id, start, exc)
        return RunRecord(prob.problem_id, cfg.task, kind, seed, WORST, WORST, False, 0, 0, 0.0,
                         f"error:{type(exc).__name__}", start)


def run_benchmark(cfg: BenchmarkConfig, out=None, figure=None):
    """Run every (problem, start) of ``cfg``; returns the sorted records.

    When ``out`` is given the CSV is written there, and ``figure`` (a path)
    receives a matplotlib summary figure.
    """
    jobs = [(cfg, prob, s) for prob in problems_for(cfg) for s in range(cfg.multistart)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            records = list(ex.map(_run_args, jobs, chunksize=max(1, len(jobs) // (4 * cfg.jobs))))
    else:
        records = [run_start(*j) for j in jobs]
    records.sort(key=lambda r: (r.problem_id, r.start_index))
    if out is not None:
        write_csv(records, out)
    if figure is not None and records:
        from . import plotting

        plotting.benchmark_summary(records, figure)
    return records


def summary(records):
    by_problem = {}
    for r in records:
        by_problem[r.problem_id] = by_problem.get(r.problem_id, False) or r.status == "ok"
    times = [r.wall_time_ms for r in records]
    return {
        "problems": len(by_problem),
        "runs": len(records),
        "success_rate": sum(by_problem.values()) / len(by_problem) if by_problem else 0.0,
        "mean_wall_time_ms": statistics.fmean(times) if times else 0.0,
        "median_wall_time_ms": statistics.median(times) if times else 0.0,
    }


def csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow(r.row())
    if records:
        s = summary(records)
        buf.write(f"# problems,{s['problems']}\n")
        buf.write(f"# runs,{s['runs']}\n")
        buf.write(f"# success_rate,{s['success_rate']:.6f}\n")
        buf.write(f"# mean_wall_time_ms,{s['mean_wall_time_ms']:.3f}\n")
        buf.write(f"# median_wall_time_ms,{s['median_wall_time_ms']:.3f}\n")
    return buf.getvalue()


def write_csv(records, path):
    Path(path).write_text(csv_text(records))


def read_csv(path):
    """Parse a results CSV back into dictionaries (footer lines skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    for r in rows:
        r["f_initial"] = from_text(r["f_initial"])
        r["f_final"] = from_text(r["f_final"])
        r["stabilized"] = r["stabilized"] == "true"
        r["evals"] = int(r["evals"])
        r["restarts"] = int(r["restarts"])
        r["wall_time_ms"] = float(r["wall_time_ms"])
    return rows


def write_trace(trace, path):
    """Evaluation trace as CSV: ``eval_index,phase,value,best_so_far,x0..x{n-1}``."""
    recs = trace.records
    dim = recs[0].point.size if recs else 0
    best = trace.best_so_far()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eval_index", "phase", "value", "best_so_far"] + [f"x{i}" for i in range(dim)])
        for r, b in zip(recs, best):
            w.writerow([r.eval_index, r.phase, to_text(r.value), to_text(b)]
                       + [repr(float(v)) for v in r.point])


def best_record(records):
    """Best-of-starts: successful runs first, then by final objective."""
    return min(records, key=lambda r: (r.status != "ok", rank(r.f_final)), default=None)


__all__ = ["COLUMNS", "TASKS", "GeneratorSpec", "BenchmarkConfig", "RunRecord",
           "Problem", "problems_for", "random_unstable_pid", "run_start", "run_benchmark", "summary", "csv_text",
           "write_csv", "read_csv", "write_trace", "best_record"]
