"""Static-output-feedback objectives over the flattened gain ``x = vec(K)``."""

from dataclasses import dataclass
import enum
import time

import numpy as np

from .engine import NmConfig, OptimizationTrace, RestartConfig, restarted_nm
from .errors import ArgumentError, DimensionError
from .lti import StateSpaceModel, close_loop, h2_norm, hinf_norm, spectral_abscissa
from .objective import WORST, better

__all__ = [
    "Kind",
    "SofProblem",
    "SofResult",
    "STAB_MARGIN",
    "gain_to_vec",
    "vec_to_gain",
    "stabilization_objective",
    "norm_objective",
    "solve_sof",
]

STAB_MARGIN = 1e-3


class Kind(str, enum.Enum):
    STABILIZE = "stabilize"
    H2 = "h2"
    HINF = "hinf"


@dataclass(frozen=True)
class SofProblem:
    model: StateSpaceModel
    kind: Kind = Kind.STABILIZE
    norm_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.HINF and not self.norm_tol > 0:
            raise ArgumentError("norm_tol must be positive for Hinf problems")

    @property
    def dim(self) -> int:
        return self.model.m * self.model.p


@dataclass
class SofResult:
    k: np.ndarray
    objective: object
    stabilized: bool
    phase1_abscissa: float
    evals: int
    restarts: int
    wall_time: float  # seconds
    f_initial: object = None
    phase1_evals: int = 0
    trace: OptimizationTrace | None = None

    def verify(self, model: StateSpaceModel) -> bool:
        """Recompute the stability flag from the stored gain."""
        return spectral_abscissa(model.a + model.b @ self.k @ model.c) < 0


def gain_to_vec(k) -> np.ndarray:
    """Row-major flattening of an ``m x p`` gain."""
    k = np.asarray(k, dtype=float)
    if k.ndim != 2:
        raise DimensionError(f"gain must be 2-D, got shape {k.shape}")
    return k.reshape(-1).copy()


def vec_to_gain(x, m: int, p: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != m * p:
        raise DimensionError(f"vector of length {x.size} cannot form a {m}x{p} gain")
    return x.reshape(m, p).copy()


def stabilization_objective(model: StateSpaceModel):
    """``x -> spectral_abscissa(A + B K C)``; always finite."""
    a, b, c, m, p = model.a, model.b, model.c, model.m, model.p

    def f(x):
        return spectral_abscissa(a + b @ vec_to_gain(x, m, p) @ c)

    return f


def norm_objective(problem: SofProblem):
    """Closed-loop H2 or H-infinity norm, WORST outside the stability region."""
    if problem.kind is Kind.STABILIZE:
        raise ArgumentError("norm_objective needs an H2 or Hinf problem")
    model = problem.model

    if problem.kind is Kind.H2:
        def f(x):
            return h2_norm(close_loop(model, vec_to_gain(x, model.m, model.p)))
    else:
        tol = problem.norm_tol

        def f(x):
            return hinf_norm(close_loop(model, vec_to_gain(x, model.m, model.p)), tol)

    return f


def _initial_value(problem, x0):
    if problem.kind is Kind.STABILIZE:
        return stabilization_objective(problem.model)(x0)
    return norm_objective(problem)(x0)


def solve_sof(problem: SofProblem, x0=None, nm_cfg: NmConfig = NmConfig(),
              rs_cfg: RestartConfig = RestartConfig(), stab_margin: float = STAB_MARGIN,
              keep_trace: bool = False) -> SofResult:
    """Search for a gain solving ``problem`` starting from ``x0`` (zero by default).

    Stabilization stops as soon as the abscissa is below ``-stab_margin``.
    Norm problems first run that stabilization phase, then minimize the norm
    from the stabilizing gain; if stabilization fails the result carries a
    WORST objective.  The returned objective is never worse than the value at
    ``x0``.
    """
    model = problem.model
    m, p = model.m, model.p
    x0 = np.zeros(m * p) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x0.size != m * p:
        raise DimensionError(f"x0 has length {x0.size}, expected {m * p}")

    t0 = time.perf_counter()
    f_initial = _initial_value(problem, x0)
    stab = stabilization_objective(model)
    x1, a1, trace, runs = restarted_nm(stab, x0, nm_cfg, rs_cfg, target=-stab_margin)
    evals = phase1_evals = len(trace)

    if problem.kind is Kind.STABILIZE:
        x_final, objective = x1, a1
    elif a1 >= 0:
        x_final, objective = x1, WORST
    else:
        f = norm_objective(problem)
        x2, v2, tr2, runs2 = restarted_nm(f, x1, nm_cfg, rs_cfg)
        trace.extend(tr2, boundary=True)
        evals += len(tr2)
        runs += runs2
        x_final, objective = x2, v2
        if better(f_initial, objective):
            x_final, objective = x0, f_initial

    k = vec_to_gain(x_final, m, p)
    res = SofResult(
        k=k,
        objective=objective,
        stabilized=False,
        phase1_abscissa=a1,
        evals=evals,
        restarts=runs,
        wall_time=time.perf_counter() - t0,
        f_initial=f_initial,
        phase1_evals=phase1_evals,
        trace=trace if keep_trace else None,
    )
    res.stabilized = res.verify(model)
    return res
