"""Dense continuous-time LTI machinery.

State-space models with a control channel (B, C) and a performance channel
(B1, C1, D11, D12, D21), static-output-feedback interconnection, spectral
abscissa, Lyapunov solves and H2 / H-infinity norms of closed loops.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .errors import DimensionError, InfeasibleError, NumericalError
from .objective import WORST

__all__ = [
    "StateSpaceModel",
    "ClosedLoopSystem",
    "eigenvalues",
    "spectral_abscissa",
    "close_loop",
    "lyapunov_solve",
    "h2_norm",
    "hinf_norm",
    "frequency_sweep_max",
]

# |d_cl| entries above this make the H2 norm unbounded
FEEDTHROUGH_TOL = 1e-12


def _matrix(x, name, shape=None):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got ndim={a.ndim}")
    if shape is not None and a.shape != shape:
        raise DimensionError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Plant for SOF design.

    Dynamics ``x' = A x + B1 w + B u``, performance output
    ``z = C1 x + D11 w + D12 u`` and measurement ``y = C x + D21 w``.
    """

    a: np.ndarray
    b1: np.ndarray
    b: np.ndarray
    c1: np.ndarray
    c: np.ndarray
    d11: np.ndarray
    d12: np.ndarray
    d21: np.ndarray
    name: str = "model"

    def __post_init__(self):
        a = _matrix(self.a, "A")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"A must be square, got {a.shape}")
        b = _matrix(self.b, "B")
        c = _matrix(self.c, "C")
        if b.shape[0] != n:
            raise DimensionError(f"B has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise DimensionError(f"C has {c.shape[1]} columns, expected {n}")
        m, p = b.shape[1], c.shape[0]
        b1 = _matrix(self.b1, "B1")
        c1 = _matrix(self.c1, "C1")
        if b1.shape[0] != n:
            raise DimensionError(f"B1 has {b1.shape[0]} rows, expected {n}")
        if c1.shape[1] != n:
            raise DimensionError(f"C1 has {c1.shape[1]} columns, expected {n}")
        m1, p1 = b1.shape[1], c1.shape[0]
        mats = dict(
            a=a, b=b, c=c, b1=b1, c1=c1,
            d11=_matrix(self.d11, "D11", (p1, m1)),
            d12=_matrix(self.d12, "D12", (p1, m)),
            d21=_matrix(self.d21, "D21", (p, m1)),
        )
        for k, v in mats.items():
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    @classmethod
    def build(cls, a, b, c, b1=None, c1=None, d11=None, d12=None, d21=None,
              m1=1, p1=1, name="model"):
        """Build a model, filling omitted performance-channel blocks with zeros."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        n = a.shape[0]
        b = b.reshape(n, -1) if b.ndim < 2 else b
        c = c.reshape(-1, n) if c.ndim < 2 else c
        m, p = b.shape[1], c.shape[0]
        if b1 is not None:
            b1 = np.asarray(b1, dtype=float).reshape(n, -1)
            m1 = b1.shape[1]
        if c1 is not None:
            c1 = np.asarray(c1, dtype=float).reshape(-1, n)
            p1 = c1.shape[0]
        return cls(
            a=a, b=b, c=c,
            b1=np.zeros((n, m1)) if b1 is None else b1,
            c1=np.zeros((p1, n)) if c1 is None else c1,
            d11=np.zeros((p1, m1)) if d11 is None else d11,
            d12=np.zeros((p1, m)) if d12 is None else d12,
            d21=np.zeros((p, m1)) if d21 is None else d21,
            name=name,
        )

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]

    @property
    def m1(self) -> int:
        return self.b1.shape[1]

    @property
    def p1(self) -> int:
        return self.c1.shape[0]

    def equals(self, other: "StateSpaceModel") -> bool:
        """Exact (bitwise) equality of every block and the name."""
        return self.name == other.name and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            and getattr(self, k).shape == getattr(other, k).shape
            for k in ("a", "b1", "b", "c1", "c", "d11", "d12", "d21")
        )


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """Closed-loop performance channel ``x' = a_cl x + b_cl w``, ``z = c_cl x + d_cl w``."""

    a_cl: np.ndarray
    b_cl: np.ndarray
    c_cl: np.ndarray
    d_cl: np.ndarray = field(default=None)

    def __post_init__(self):
        a = _matrix(self.a_cl, "a_cl")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"a_cl must be square, got {a.shape}")
        b = _matrix(self.b_cl, "b_cl")
        c = _matrix(self.c_cl, "c_cl")
        if b.shape[0] != n or c.shape[1] != n:
            raise DimensionError("b_cl / c_cl inconsistent with a_cl")
        d = np.zeros((c.shape[0], b.shape[1])) if self.d_cl is None else self.d_cl
        d = _matrix(d, "d_cl", (c.shape[0], b.shape[1]))
        for k, v in dict(a_cl=a, b_cl=b, c_cl=c, d_cl=d).items():
            object.__setattr__(self, k, v)


def _square(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a real square matrix, with multiplicity."""
    m = _square(m)
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"non-finite entries in {m.shape[0]}x{m.shape[0]} matrix")
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigenvalue iteration failed for {m.shape[0]}x{m.shape[0]} matrix: {exc}"
        ) from exc


def spectral_abscissa(m) -> float:
    """Largest real part over the spectrum; negative iff ``m`` is Hurwitz."""
    return float(np.max(eigenvalues(m).real))


def close_loop(model: StateSpaceModel, k) -> ClosedLoopSystem:
    """Interconnect ``model`` with the static output feedback ``u = K y``."""
    k = np.asarray(k, dtype=float)
    if k.ndim < 2 and k.size == model.m * model.p:
        k = k.reshape(model.m, model.p)
    if k.shape != (model.m, model.p):
        raise DimensionError(f"gain has shape {k.shape}, expected {(model.m, model.p)}")
    bk = model.b @ k
    d12k = model.d12 @ k
    return ClosedLoopSystem(
        a_cl=model.a + bk @ model.c,
        b_cl=model.b1 + bk @ model.d21,
        c_cl=model.c1 + d12k @ model.c,
        d_cl=model.d11 + d12k @ model.d21,
    )


def lyapunov_solve(a, q) -> np.ndarray:
    """Solve ``A^T P + P A + Q = 0`` for a Hurwitz ``A``.

    The equation is vectorized with Kronecker products and solved as a dense
    ``n^2 x n^2`` system, which is adequate for the small orders used here.
    """
    a = _square(a, "A")
    q = _square(q, "Q")
    n = a.shape[0]
    if q.shape != (n, n):
        raise DimensionError(f"Q has shape {q.shape}, expected {(n, n)}")
    if spectral_abscissa(a) >= 0:
        raise InfeasibleError("Lyapunov solve requires a Hurwitz A")
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    lhs = np.kron(eye, a.T) + np.kron(a.T, eye)
    try:
        vec_p = np.linalg.solve(lhs, -q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Kronecker system (n={n})") from exc
    p = vec_p.reshape(n, n, order="F")
    return 0.5 * (p + p.T)


def h2_norm(sys: ClosedLoopSystem):
    """H2 norm through the observability Gramian; WORST if unbounded."""
    if spectral_abscissa(sys.a_cl) >= 0 or np.any(np.abs(sys.d_cl) > FEEDTHROUGH_TOL):
        return WORST
    p = lyapunov_solve(sys.a_cl, sys.c_cl.T @ sys.c_cl)
    return float(np.sqrt(max(np.trace(sys.b_cl.T @ p @ sys.b_cl), 0.0)))


def _sigma_max_response(sys, omegas):
    a, b, c, d = sys.a_cl, sys.b_cl, sys.c_cl, sys.d_cl
    n = a.shape[0]
    s = 1j * np.asarray(omegas, dtype=float)
    res = s[:, None, None] * np.eye(n) - a
    try:
        x = np.linalg.solve(res, np.broadcast_to(b, (len(s),) + b.shape))
        keep = np.ones(len(s), dtype=bool)
    except np.linalg.LinAlgError:
        x = np.zeros((len(s),) + b.shape, dtype=complex)
        keep = np.zeros(len(s), dtype=bool)
        for i in range(len(s)):
            try:
                x[i] = np.linalg.solve(res[i], b)
                keep[i] = True
            except np.linalg.LinAlgError:
                warnings.warn(f"singular resolvent at omega={omegas[i]!r}; point skipped",
                              RuntimeWarning, stacklevel=3)
    g = c @ x[keep] + d
    if g.shape[0] == 0:
        return None
    return float(np.max(np.linalg.svd(g, compute_uv=False)[:, 0]))


def frequency_sweep_max(sys: ClosedLoopSystem, grid) -> float:
    """Max of the largest singular value of ``T(j w)`` over ``grid``.

    Always a lower bound on the H-infinity norm of a stable ``sys``.
    Frequencies where ``j w I - A`` is singular are skipped with a warning.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise NumericalError("empty frequency grid")
    out = _sigma_max_response(sys, grid)
    if out is None:
        raise NumericalError("every frequency grid point was singular")
    return out


def _default_grid(a):
    ev = eigenvalues(a)
    mags = np.abs(ev)
    mags = mags[mags > 0]
    lo = np.log10(mags.min()) - 2 if mags.size else -3.0
    hi = np.log10(mags.max()) + 2 if mags.size else 3.0
    return np.concatenate(([0.0], np.abs(ev.imag), mags, np.logspace(lo, hi, 80)))


def _hamiltonian_clear(sys, gamma, axis_tol):
    """True when the gamma-Hamiltonian has no eigenvalue near the imaginary axis."""
    a, b, c, d = sys.a_cl, sys.b_cl, sys.c_cl, sys.d_cl
    r = gamma**2 * np.eye(d.shape[1]) - d.T @ d
    r_inv = np.linalg.inv(r)
    ae = a + b @ r_inv @ d.T @ c
    ham = np.block([
        [ae, b @ r_inv @ b.T],
        [-c.T @ (np.eye(d.shape[0]) + d @ r_inv @ d.T) @ c, -ae.T],
    ])
    ev = eigenvalues(ham)
    return not np.any(np.abs(ev.real) < axis_tol)


def hinf_norm(sys: ClosedLoopSystem, tol: float = 1e-6, axis_tol: float = 1e-7,
              max_steps: int = 80):
    """H-infinity norm by gamma bisection on the Hamiltonian test.

    Returns an upper estimate within relative ``tol`` of the true norm, or
    WORST for an unstable ``a_cl``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if spectral_abscissa(sys.a_cl) >= 0:
        return WORST
    d_norm = float(np.linalg.norm(sys.d_cl, 2)) if sys.d_cl.size else 0.0
    if not sys.b_cl.any() or not sys.c_cl.any():
        return d_norm
    sweep = _sigma_max_response(sys, _default_grid(sys.a_cl))
    lo = max(d_norm, sweep or 0.0)
    if lo == 0.0:
        return 0.0
    if lo <= d_norm:
        lo = d_norm * (1 + tol)
    hi = 2.0 * lo
    for _ in range(max_steps):
        if _hamiltonian_clear(sys, hi, axis_tol):
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalError("could not find a valid upper gamma bound")
    for _ in range(max_steps):
        if hi - lo <= tol * hi:
            return float(hi)
        mid = 0.5 * (lo + hi)
        if _hamiltonian_clear(sys, mid, axis_tol):
            hi = mid
        else:
            lo = mid
    raise NumericalError(f"gamma bracket did not close after {max_steps} bisection steps")
