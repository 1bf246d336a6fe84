"""Nelder-Mead simplex search and the restart-at-incumbent driver.

Objectives map a 1-D float array to a float or :data:`~dsctrl.objective.WORST`.
NaN and ``+inf`` returns are treated as WORST.  No randomness is used anywhere,
so identical inputs produce identical traces.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import ArgumentError
from .objective import WORST, better, normalize, not_worse, rank

log = logging.getLogger(__name__)

__all__ = [
    "NmConfig",
    "RestartConfig",
    "TraceRecord",
    "OptimizationTrace",
    "Simplex",
    "ObjectiveError",
    "init_simplex",
    "nm_iterate",
    "nm_run",
    "restarted_nm",
]

NM_STEP = "nm_step"
RESTART_BOUNDARY = "restart_boundary"


class ObjectiveError(RuntimeError):
    """Raised when the objective fails; ``point`` is the offending input."""

    def __init__(self, point, cause):
        super().__init__(f"objective failed at {np.array2string(point)}: {cause!r}")
        self.point = point


@dataclass(frozen=True)
class NmConfig:
    alpha: float = 1.0  # reflection
    gamma: float = 2.0  # expansion
    beta: float = 0.5  # contraction
    delta: float = 0.5  # shrink
    max_evals: int | None = None  # None -> 400 * n
    tol_simplex_diameter: float = 1e-8
    tol_value_spread: float = 1e-10

    def __post_init__(self):
        if not self.alpha > 0:
            raise ArgumentError("alpha must be > 0")
        if not self.gamma > max(1.0, self.alpha):
            raise ArgumentError("gamma must exceed max(1, alpha)")
        if not 0 < self.beta < 1 or not 0 < self.delta < 1:
            raise ArgumentError("beta and delta must lie in (0, 1)")
        if self.tol_simplex_diameter <= 0 or self.tol_value_spread <= 0:
            raise ArgumentError("tolerances must be positive")
        if self.max_evals is not None and self.max_evals < 1:
            raise ArgumentError("max_evals must be >= 1")

    def budget(self, n: int) -> int:
        return 400 * n if self.max_evals is None else self.max_evals


@dataclass(frozen=True)
class RestartConfig:
    restart_tol: float = 1e-6
    max_restarts: int = 20
    initial_step: float = 0.1

    def __post_init__(self):
        if self.restart_tol <= 0:
            raise ArgumentError("restart_tol must be > 0")
        if self.max_restarts < 1:
            raise ArgumentError("max_restarts must be >= 1")
        if self.initial_step <= 0:
            raise ArgumentError("initial_step must be > 0")


@dataclass(frozen=True)
class TraceRecord:
    eval_index: int
    point: np.ndarray
    value: object
    phase: str = NM_STEP


@dataclass
class OptimizationTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def best_so_far(self) -> list:
        out, best = [], WORST
        for r in self.records:
            if better(r.value, best):
                best = r.value
            out.append(best)
        return out

    def improvements(self) -> list:
        """Records at which the running best strictly improved (the first record included)."""
        out, best = [], None
        for r in self.records:
            if best is None or better(r.value, best):
                best = r.value
                out.append(r)
        return out

    def extend(self, other: "OptimizationTrace", boundary: bool = False):
        offset = len(self.records)
        for i, r in enumerate(other.records):
            phase = RESTART_BOUNDARY if boundary and i == 0 else r.phase
            self.records.append(TraceRecord(offset + i, r.point, r.value, phase))


class _Counted:
    """Wraps an objective: normalizes values and appends every call to a trace."""

    def __init__(self, f, trace):
        self.f = f
        self.trace = trace

    def __call__(self, x):
        x = np.array(x, dtype=float)
        try:
            v = normalize(self.f(x))
        except Exception as exc:
            raise ObjectiveError(x, exc) from exc
        self.trace.records.append(TraceRecord(len(self.trace.records), x, v))
        return v

    @property
    def evals(self):
        return len(self.trace.records)


class Simplex:
    """``n + 1`` evaluated vertices kept sorted best-first.

    Sorting is stable and new vertices are appended before sorting, so on
    equal values the older vertex keeps its place ahead of the newcomer.
    """

    def __init__(self, points, values):
        self.points = [np.array(p, dtype=float) for p in points]
        self.values = list(values)
        if len(self.points) != len(self.values):
            raise ArgumentError("points and values differ in length")
        self.sort()

    def sort(self):
        order = sorted(range(len(self.values)), key=lambda i: rank(self.values[i]))
        self.points = [self.points[i] for i in order]
        self.values = [self.values[i] for i in order]

    @property
    def dim(self) -> int:
        return self.points[0].size

    @property
    def best(self):
        return self.points[0], self.values[0]

    def diameter(self) -> float:
        x0 = self.points[0]
        return max((float(np.max(np.abs(p - x0))) for p in self.points[1:]), default=0.0)

    def spread(self):
        """Best-to-worst value gap, or None when any vertex is WORST."""
        if any(v is WORST for v in self.values):
            return None
        return self.values[-1] - self.values[0]

    def replace_worst(self, point, value):
        del self.points[-1], self.values[-1]
        self.points.append(point)
        self.values.append(value)
        self.sort()


def init_simplex(x0, step: float) -> list:
    """Axis-perturbed starting simplex around ``x0``.

    Coordinate ``i`` is moved by ``step * |x0_i|``, or by ``step`` itself when
    ``|x0_i| <= 1e-8``.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size < 1:
        raise ArgumentError("x0 must have at least one coordinate")
    if step <= 0:
        raise ArgumentError("step must be > 0")
    pts = [x0.copy()]
    for i in range(x0.size):
        h = step * abs(x0[i]) if abs(x0[i]) > 1e-8 else step
        p = x0.copy()
        p[i] += h
        pts.append(p)
    return pts


def nm_iterate(simplex: Simplex, f, cfg: NmConfig) -> Simplex:
    """One reflect / expand / contract / shrink step, in place; returns ``simplex``."""
    pts, vals = simplex.points, simplex.values
    worst, f_worst = pts[-1], vals[-1]
    f_best, f_second = vals[0], vals[-2]
    centroid = np.mean(pts[:-1], axis=0)

    xr = centroid + cfg.alpha * (centroid - worst)
    fr = f(xr)
    if better(fr, f_best):
        xe = centroid + cfg.gamma * (centroid - worst)
        fe = f(xe)
        if better(fe, fr):
            simplex.replace_worst(xe, fe)
        else:
            simplex.replace_worst(xr, fr)
        return simplex
    if better(fr, f_second):
        simplex.replace_worst(xr, fr)
        return simplex
    if better(fr, f_worst):
        xc = centroid + cfg.beta * (xr - centroid)
        fc = f(xc)
        if not_worse(fc, fr):
            simplex.replace_worst(xc, fc)
            return simplex
    else:
        xc = centroid + cfg.beta * (worst - centroid)
        fc = f(xc)
        if better(fc, f_worst):
            simplex.replace_worst(xc, fc)
            return simplex
    best = pts[0]
    new_pts = [best] + [best + cfg.delta * (p - best) for p in pts[1:]]
    new_vals = [vals[0]] + [f(p) for p in new_pts[1:]]
    simplex.points, simplex.values = new_pts, new_vals
    simplex.sort()
    return simplex


def _converged(simplex, cfg):
    spread = simplex.spread()
    return (spread is not None and spread <= cfg.tol_value_spread
            and simplex.diameter() <= cfg.tol_simplex_diameter)


def nm_run(f, x0, cfg: NmConfig = NmConfig(), step: float = 0.1, target=None):
    """Run Nelder-Mead from ``x0`` until converged or out of budget.

    Stops when the simplex diameter and the value spread are both below their
    tolerances, when ``cfg.max_evals`` evaluations have been spent, or (if
    ``target`` is given) as soon as the best value drops strictly below it.

    Returns ``(best_point, best_value, trace)``.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size == 0:
        raise ArgumentError("x0 has dimension 0")
    trace = OptimizationTrace()
    fc = _Counted(f, trace)
    pts = init_simplex(x0, step)
    simplex = Simplex(pts, [fc(p) for p in pts])
    budget = cfg.budget(x0.size)

    def reached():
        v = simplex.values[0]
        return target is not None and v is not WORST and v < target

    while fc.evals < budget and not reached() and not _converged(simplex, cfg):
        nm_iterate(simplex, fc, cfg)
    x, v = simplex.best
    return x.copy(), v, trace


def restarted_nm(f, x0, nm_cfg: NmConfig = NmConfig(), rs_cfg: RestartConfig = RestartConfig(),
                 target=None):
    """Nelder-Mead restarted at the incumbent until it stops improving.

    Each run after the first starts from a fresh simplex of scale
    ``rs_cfg.initial_step`` around the current best point.  The loop ends when
    the relative improvement ``(f_prev - f_new) / max(1, |f_prev|)`` falls
    below ``rs_cfg.restart_tol``, when two consecutive runs both end at WORST,
    when ``rs_cfg.max_restarts`` runs have been made, or when ``target`` is
    beaten.  Going from WORST to a finite value always counts as improvement.

    Returns ``(best_point, best_value, trace, runs)`` where ``runs`` counts the
    Nelder-Mead runs performed, the first one included.
    """
    x, v, trace = nm_run(f, x0, nm_cfg, rs_cfg.initial_step, target)
    runs = 1
    while runs < rs_cfg.max_restarts:
        if target is not None and v is not WORST and v < target:
            break
        x_new, v_new, tr = nm_run(f, x, nm_cfg, rs_cfg.initial_step, target)
        trace.extend(tr, boundary=True)
        runs += 1
        prev = v
        if better(v_new, v):
            x, v = x_new, v_new
        if prev is WORST:
            if v is WORST:
                break
            continue
        if (prev - v) / max(1.0, abs(prev)) < rs_cfg.restart_tol:
            break
    log.debug("restarted_nm: %d runs, %d evals, best=%r", runs, len(trace), v)
    return x, v, trace, runs
