"""Step-response shaping of a PID loop: rise time plus weighted band deviation.

The loop is unity feedback on the tracking error ``e = r - y`` with a unit
step reference and a PID whose derivative term is filtered::

    u = kp e + ki int(e) + kd N (e - q),   q' = N (e - q)

The objective is ``f(x) = t_r + lambda * max_dev`` over ``x = (kp, ki, kd)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .engine import NmConfig, RestartConfig, restarted_nm
from .errors import ArgumentError
from .lti import ClosedLoopSystem, StateSpaceModel, spectral_abscissa

__all__ = [
    "PidParams",
    "Envelope",
    "SimTrace",
    "ShapingOutcome",
    "ShapingRun",
    "CLAMP",
    "default_plant",
    "zn_initial",
    "ultimate_gain",
    "build_pid_closed_loop",
    "simulate_step",
    "rise_time",
    "max_deviation",
    "score_trace",
    "evaluate_shaping",
    "shaping_objective",
    "optimize_shaping",
]

CLAMP = 1e12
DEFAULT_FILTER_N = 100.0
DEFAULT_STEPS = 5000
MAX_FRAMES = 500


@dataclass(frozen=True)
class PidParams:
    kp: float
    ki: float
    kd: float
    derivative_filter_n: float = DEFAULT_FILTER_N

    def __post_init__(self):
        if not self.derivative_filter_n > 0:
            raise ArgumentError("derivative filter coefficient must be > 0")
        if not all(map(math.isfinite, (self.kp, self.ki, self.kd, self.derivative_filter_n))):
            raise ArgumentError("PID parameters must be finite")

    @property
    def x(self) -> np.ndarray:
        return np.array([self.kp, self.ki, self.kd])


@dataclass(frozen=True)
class Envelope:
    z_min: float = 0.98
    z_max: float = 1.02
    horizon_t: float = 20.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ArgumentError("z_min must be below z_max")
        if not self.horizon_t > 0:
            raise ArgumentError("horizon must be positive")
        if not self.lam >= 0:
            raise ArgumentError("lambda must be >= 0")


@dataclass(frozen=True, eq=False)
class SimTrace:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ArgumentError("trace needs equal-length time/value arrays of length >= 2")


@dataclass(frozen=True, eq=False)
class ShapingOutcome:
    t_r: float
    max_dev: float
    f: float
    trace: SimTrace


def default_plant() -> StateSpaceModel:
    """G(s) = 1 / (s + 1)^3 in controllable canonical form."""
    a = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -3.0, -3.0]]
    return StateSpaceModel.build(a, [0.0, 0.0, 1.0], [[1.0, 0.0, 0.0]], name="lag3")


def zn_initial(ku: float, tu: float, derivative_filter_n: float = DEFAULT_FILTER_N) -> PidParams:
    """Classic Ziegler-Nichols PID gains from the ultimate gain and period."""
    if not (ku > 0 and tu > 0):
        raise ArgumentError("ku and tu must be positive")
    return PidParams(0.6 * ku, 1.2 * ku / tu, 0.075 * ku * tu, derivative_filter_n)


def ultimate_gain(plant: StateSpaceModel, k_max: float = 1e6, tol: float = 1e-10):
    """Smallest proportional gain putting the loop on the stability boundary.

    Returns ``(ku, tu)``, with ``tu`` the oscillation period at ``ku``.
    Requires the loop to be stable for small positive gains.
    """
    a, b, c = _siso(plant)
    abscissa = lambda k: spectral_abscissa(a - k * b @ c)
    if abscissa(0.0) >= 0:
        raise ArgumentError("plant must be open-loop stable to find an ultimate gain")
    lo, hi = 0.0, 1.0
    while abscissa(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > k_max:
            raise ArgumentError("no finite ultimate gain for this plant")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if abscissa(mid) < 0:
            lo = mid
        else:
            hi = mid
    ev = np.linalg.eigvals(a - hi * b @ c)
    omega = float(np.abs(ev[np.argmax(ev.real)].imag))
    if omega == 0:
        raise ArgumentError("loop crosses the boundary at a real eigenvalue; no ultimate period")
    return hi, 2 * math.pi / omega


def _siso(plant):
    if plant.m != 1 or plant.p != 1:
        raise ArgumentError(f"plant must be SISO, got {plant.m} inputs / {plant.p} outputs")
    if np.any(plant.d21 != 0):
        raise ArgumentError("plant measurement must have zero feedthrough")
    return plant.a, plant.b, plant.c


def build_pid_closed_loop(plant: StateSpaceModel, pid: PidParams) -> ClosedLoopSystem:
    """Augmented loop with states ``[plant; integrator; derivative filter]``.

    Input is the step reference, output is the plant output.
    """
    a, b, c = _siso(plant)
    n = a.shape[0]
    nf = pid.derivative_filter_n
    kpd = pid.kp + pid.kd * nf
    a_cl = np.zeros((n + 2, n + 2))
    a_cl[:n, :n] = a - kpd * b @ c
    a_cl[:n, n] = pid.ki * b[:, 0]
    a_cl[:n, n + 1] = -pid.kd * nf * b[:, 0]
    a_cl[n, :n] = -c[0]
    a_cl[n + 1, :n] = -nf * c[0]
    a_cl[n + 1, n + 1] = -nf
    b_cl = np.concatenate([kpd * b[:, 0], [1.0, nf]])[:, None]
    c_cl = np.concatenate([c[0], [0.0, 0.0]])[None, :]
    return ClosedLoopSystem(a_cl, b_cl, c_cl, np.zeros((1, 1)))


_BLOCK = 64


def simulate_step(sys: ClosedLoopSystem, horizon_t: float, h: float | None = None) -> SimTrace:
    """Unit-step response by fixed-step classical RK4 from the zero state.

    For a linear system with constant input one RK4 step is the affine map
    ``x+ = M x + v`` with ``M`` the 4th-order Taylor polynomial of ``e^{hA}``;
    that map is applied in blocks of 64 steps.  Diverging states are clamped
    to +-1e12 so unstable loops still give a finite trace.
    """
    if h is None:
        h = horizon_t / DEFAULT_STEPS
    if not h > 0:
        raise ArgumentError("step h must be positive")
    if horizon_t < 2 * h:
        raise ArgumentError("horizon must cover at least two steps")
    steps = int(round(horizon_t / h))
    times = np.arange(steps + 1) * h
    a, b = sys.a_cl, sys.b_cl[:, 0]
    c, d = sys.c_cl[0], float(sys.d_cl[0, 0])
    n = a.shape[0]
    ha = h * a
    eye = np.eye(n)
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    step_map = eye + ha + ha2 / 2 + ha3 / 6 + ha3 @ ha / 24
    step_in = h * (eye + ha / 2 + ha2 / 6 + ha3 / 24) @ b

    # powers[j] = M^(j+1), offsets[j] = sum_{i<=j} M^i v
    powers = np.empty((_BLOCK, n, n))
    offsets = np.empty((_BLOCK, n))
    pw, off = step_map.copy(), step_in.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(_BLOCK):
            powers[j], offsets[j] = pw, off
            pw = step_map @ pw
            off = step_map @ off + step_in
        states = np.zeros((steps + 1, n))
        x = np.zeros(n)
        k = 1
        while k <= steps:
            cnt = min(_BLOCK, steps - k + 1)
            blk = powers[:cnt] @ x + offsets[:cnt]
            blk = np.clip(np.nan_to_num(blk, nan=CLAMP, posinf=CLAMP, neginf=-CLAMP), -CLAMP, CLAMP)
            states[k:k + cnt] = blk
            x = blk[-1]
            k += cnt
        z = states @ c + d
    z = np.clip(np.nan_to_num(z, nan=CLAMP, posinf=CLAMP, neginf=-CLAMP), -CLAMP, CLAMP)
    return SimTrace(times, z)


def rise_time(trace: SimTrace, env: Envelope) -> float:
    """First sampled time inside ``[z_min, z_max]``; the horizon if never."""
    inside = (trace.values >= env.z_min) & (trace.values <= env.z_max)
    idx = np.flatnonzero(inside)
    return float(trace.times[idx[0]]) if idx.size else float(env.horizon_t)


def max_deviation(trace: SimTrace, env: Envelope, t_r: float) -> float:
    """Largest excursion outside the band.

    Overshoot above ``z_max`` counts for every sample with ``t > 0``;
    undershoot below ``z_min`` only for samples with ``t > t_r``.
    """
    t, z = trace.times, trace.values
    above = z[t > 0] - env.z_max
    below = env.z_min - z[t > t_r]
    dev = 0.0
    if above.size:
        dev = max(dev, float(above.max()))
    if below.size:
        dev = max(dev, float(below.max()))
    return dev


def score_trace(trace: SimTrace, env: Envelope) -> ShapingOutcome:
    t_r = rise_time(trace, env)
    dev = max_deviation(trace, env, t_r)
    f = t_r if env.lam == 0 else t_r + env.lam * dev
    return ShapingOutcome(t_r, dev, f, trace)


def evaluate_shaping(plant, env: Envelope, x, filter_n: float = DEFAULT_FILTER_N,
                     h: float | None = None) -> ShapingOutcome:
    kp, ki, kd = (float(v) for v in np.asarray(x, dtype=float).ravel())
    sys = build_pid_closed_loop(plant, PidParams(kp, ki, kd, filter_n))
    return score_trace(simulate_step(sys, env.horizon_t, h), env)


def shaping_objective(plant, env: Envelope, filter_n: float = DEFAULT_FILTER_N,
                      h: float | None = None):
    """``x = (kp, ki, kd) -> t_r + lambda * max_dev``; finite for any finite ``x``."""
    _siso(plant)

    def f(x):
        return evaluate_shaping(plant, env, x, filter_n, h).f

    return f


@dataclass
class ShapingRun:
    pid: PidParams
    outcome: ShapingOutcome
    initial: ShapingOutcome
    frames: list = field(default_factory=list)  # (eval_index, x, ShapingOutcome)
    evals: int = 0
    restarts: int = 0


def _subsample(items, cap):
    if len(items) <= cap:
        return items
    idx = np.unique(np.round(np.linspace(0, len(items) - 1, cap)).astype(int))
    return [items[i] for i in idx]


def optimize_shaping(plant, env: Envelope, x0, nm_cfg: NmConfig = NmConfig(),
                     rs_cfg: RestartConfig = RestartConfig(),
                     filter_n: float = DEFAULT_FILTER_N, h: float | None = None,
                     max_frames: int = MAX_FRAMES) -> ShapingRun:
    """Minimize the shaping objective from ``x0`` with restarted Nelder-Mead.

    Frames are the responses at every evaluation that improved the running
    best, subsampled to at most ``max_frames`` (first and last always kept).
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != 3:
        raise ArgumentError("x0 must be (kp, ki, kd)")
    f = shaping_objective(plant, env, filter_n, h)
    x, _, trace, runs = restarted_nm(f, x0, nm_cfg, rs_cfg)
    improving = _subsample(trace.improvements(), max_frames)
    frames = [(r.eval_index, r.point, evaluate_shaping(plant, env, r.point, filter_n, h))
              for r in improving]
    best = evaluate_shaping(plant, env, x, filter_n, h)
    return ShapingRun(
        pid=PidParams(*x, filter_n),
        outcome=best,
        initial=evaluate_shaping(plant, env, x0, filter_n, h),
        frames=frames,
        evals=len(trace),
        restarts=runs,
    )
