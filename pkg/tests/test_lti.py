import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, linalg

from conftest import random_stable
from dsctrl.errors import DimensionError, InfeasibleError, NumericalError
from dsctrl.lti import (ClosedLoopSystem, StateSpaceModel, close_loop, eigenvalues,
                        frequency_sweep_max, h2_norm, hinf_norm, lyapunov_solve,
                        spectral_abscissa)
from dsctrl.objective import WORST


def first_order(gain=1.0):
    return ClosedLoopSystem([[-1.0]], [[gain]], [[1.0]])


# -- eigenvalues / abscissa ------------------------------------------------------

def test_eigenvalues_diagonal():
    assert sorted(eigenvalues(np.diag([-1.0, -2.0])).real) == [-2.0, -1.0]


def test_eigenvalues_rotation_generator():
    ev = eigenvalues([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(sorted(ev.imag), [-1.0, 1.0])
    assert np.allclose(ev.real, 0.0)


def test_eigenvalues_companion():
    # lambda^2 + 3 lambda + 2 = (lambda + 1)(lambda + 2)
    ev = eigenvalues([[0.0, 1.0], [-2.0, -3.0]])
    assert np.allclose(sorted(ev.real), [-2.0, -1.0])


def test_eigenvalues_rejects_non_square():
    with pytest.raises(DimensionError):
        eigenvalues(np.zeros((2, 3)))


def test_eigenvalues_rejects_nan():
    with pytest.raises(NumericalError):
        eigenvalues([[np.nan]])


def test_conjugate_pairs(rng):
    m = rng.standard_normal((7, 7))
    ev = eigenvalues(m)
    cplx = ev[np.abs(ev.imag) > 1e-12]
    for z in cplx:
        assert np.min(np.abs(cplx - np.conj(z))) <= 1e-9 * np.linalg.norm(m)


def test_spectral_abscissa_examples():
    assert spectral_abscissa(np.diag([-1.0, -2.0])) == -1.0
    # lambda^2 + lambda - 2 = (lambda - 1)(lambda + 2)
    assert spectral_abscissa([[0.0, 1.0], [2.0, -1.0]]) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), shift=st.floats(-10, 10))
def test_abscissa_shift(seed, n, shift):
    m = np.random.default_rng(seed).standard_normal((n, n))
    assert spectral_abscissa(m + shift * np.eye(n)) == pytest.approx(
        spectral_abscissa(m) + shift, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n1=st.integers(1, 5), n2=st.integers(1, 5))
def test_abscissa_block_diagonal(seed, n1, n2):
    rng = np.random.default_rng(seed)
    a1, a2 = rng.standard_normal((n1, n1)), rng.standard_normal((n2, n2))
    assert spectral_abscissa(linalg.block_diag(a1, a2)) == pytest.approx(
        max(spectral_abscissa(a1), spectral_abscissa(a2)), abs=1e-9)


# -- close_loop ------------------------------------------------------------------

def test_close_loop_zero_gain(rng):
    model = StateSpaceModel(
        a=rng.standard_normal((3, 3)), b1=rng.standard_normal((3, 2)),
        b=rng.standard_normal((3, 2)), c1=rng.standard_normal((2, 3)),
        c=rng.standard_normal((1, 3)), d11=rng.standard_normal((2, 2)),
        d12=rng.standard_normal((2, 2)), d21=rng.standard_normal((1, 2)))
    cl = close_loop(model, np.zeros((2, 1)))
    assert np.array_equal(cl.a_cl, model.a)
    assert np.array_equal(cl.b_cl, model.b1)
    assert np.array_equal(cl.c_cl, model.c1)
    assert np.array_equal(cl.d_cl, model.d11)


def test_close_loop_scalar():
    model = StateSpaceModel.build([[0.0]], [[1.0]], [[1.0]])
    assert close_loop(model, [[-2.0]]).a_cl[0, 0] == -2.0


def test_close_loop_hand_expansion():
    # 2 states, SISO control channel, scalar performance channel, all terms nonzero
    a = [[1.0, 2.0], [3.0, 4.0]]
    b = [[5.0], [6.0]]
    c = [[7.0, 8.0]]
    b1 = [[0.5], [-1.0]]
    c1 = [[2.0, -3.0]]
    d11, d12, d21 = [[0.25]], [[1.5]], [[-0.5]]
    k = -0.1
    model = StateSpaceModel(a=a, b1=b1, b=b, c1=c1, c=c, d11=d11, d12=d12, d21=d21)
    cl = close_loop(model, [[k]])
    expected_a = [[a[i][j] + b[i][0] * k * c[0][j] for j in range(2)] for i in range(2)]
    expected_b = [[b1[i][0] + b[i][0] * k * d21[0][0]] for i in range(2)]
    expected_c = [[c1[0][j] + d12[0][0] * k * c[0][j] for j in range(2)]]
    expected_d = [[d11[0][0] + d12[0][0] * k * d21[0][0]]]
    # spot values worked by hand: a11 = 1 + 5*(-0.1)*7 = -2.5, d = 0.25 + 1.5*(-0.1)*(-0.5) = 0.325
    assert cl.a_cl[0, 0] == pytest.approx(-2.5)
    assert cl.d_cl[0, 0] == pytest.approx(0.325)
    assert np.allclose(cl.a_cl, expected_a)
    assert np.allclose(cl.b_cl, expected_b)
    assert np.allclose(cl.c_cl, expected_c)
    assert np.allclose(cl.d_cl, expected_d)


def test_close_loop_shape_mismatch():
    model = StateSpaceModel.build(np.eye(2), np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionError):
        close_loop(model, np.zeros((2, 2)))


def test_model_dimension_checks():
    with pytest.raises(DimensionError):
        StateSpaceModel.build(np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionError):
        StateSpaceModel.build(np.eye(2), np.ones((2, 1)), np.ones((1, 3)))
    with pytest.raises(DimensionError):
        StateSpaceModel.build([[np.inf]], [[1.0]], [[1.0]])


# -- Lyapunov ----------------------------------------------------------------------

def test_lyapunov_scalar():
    assert lyapunov_solve([[-1.0]], [[1.0]])[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_lyapunov_zero_q(rng):
    a = random_stable(rng, 4)
    assert np.array_equal(lyapunov_solve(a, np.zeros((4, 4))), np.zeros((4, 4)))


def test_lyapunov_unstable_is_infeasible():
    with pytest.raises(InfeasibleError):
        lyapunov_solve([[1.0]], [[1.0]])


def test_lyapunov_matches_scipy(rng):
    # independent Bartels-Stewart route
    for _ in range(10):
        n = int(rng.integers(1, 7))
        a = random_stable(rng, n)
        q = rng.standard_normal((n, n))
        q = q @ q.T
        ours = lyapunov_solve(a, q)
        ref = linalg.solve_continuous_lyapunov(a.T, -q)
        assert np.allclose(ours, ref, rtol=1e-8, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_lyapunov_residual_property(seed, n):
    rng = np.random.default_rng(seed)
    a = random_stable(rng, n, margin=0.05)
    g = rng.standard_normal((n, n))
    q = g @ g.T
    p = lyapunov_solve(a, q)
    res = np.linalg.norm(a.T @ p + p @ a + q)
    assert res <= 1e-8 * (np.linalg.norm(a) * np.linalg.norm(p) + np.linalg.norm(q))
    assert np.array_equal(p, p.T)
    assert np.min(np.linalg.eigvalsh(p)) >= -1e-10 * np.linalg.norm(p)


# -- H2 ------------------------------------------------------------------------------

def test_h2_first_order_against_impulse_energy():
    energy, _ = integrate.quad(lambda t: math.exp(-2 * t), 0, math.inf)
    assert energy == pytest.approx(0.5)
    assert h2_norm(first_order()) == pytest.approx(math.sqrt(energy), abs=1e-9)


def test_h2_zero_output():
    assert h2_norm(ClosedLoopSystem([[-1.0]], [[1.0]], [[0.0]])) == 0.0


def test_h2_unstable_and_feedthrough_are_worst():
    assert h2_norm(ClosedLoopSystem([[1.0]], [[1.0]], [[1.0]])) is WORST
    assert h2_norm(ClosedLoopSystem([[-1.0]], [[1.0]], [[1.0]], [[1e-6]])) is WORST
    assert h2_norm(ClosedLoopSystem([[-1.0]], [[1.0]], [[1.0]], [[1e-13]])) != WORST


def test_h2_duality(rng):
    for _ in range(50):
        n = int(rng.integers(1, 7))
        a = random_stable(rng, n, margin=0.1)
        b = rng.standard_normal((n, 2))
        c = rng.standard_normal((3, n))
        sys = ClosedLoopSystem(a, b, c)
        w = lyapunov_solve(a.T, b @ b.T)  # controllability Gramian: A W + W A^T + B B^T = 0
        dual = math.sqrt(np.trace(c @ w @ c.T))
        assert h2_norm(sys) == pytest.approx(dual, rel=1e-6)


# -- Hinf / frequency sweep --------------------------------------------------------

def test_hinf_first_order():
    assert hinf_norm(first_order(), tol=1e-7) == pytest.approx(1.0, abs=1e-6)


def test_hinf_scaled_first_order():
    assert hinf_norm(first_order(5.0), tol=1e-7) == pytest.approx(5.0, rel=1e-6)


def test_hinf_zero_system():
    assert hinf_norm(ClosedLoopSystem([[-1.0]], [[1.0]], [[0.0]], [[0.0]])) == 0.0


def test_hinf_pure_feedthrough():
    sys = ClosedLoopSystem([[-1.0]], [[0.0]], [[1.0]], [[3.0]])
    assert hinf_norm(sys) == pytest.approx(3.0)


def test_hinf_unstable_is_worst():
    assert hinf_norm(ClosedLoopSystem([[0.5]], [[1.0]], [[1.0]])) is WORST


def test_hinf_resonant_second_order():
    # 1/(s^2 + 2 z s + 1): peak 1/(2 z sqrt(1 - z^2)) at w = sqrt(1 - 2 z^2)
    z = 0.1
    sys = ClosedLoopSystem([[0.0, 1.0], [-1.0, -2 * z]], [[0.0], [1.0]], [[1.0, 0.0]])
    assert hinf_norm(sys, tol=1e-9) == pytest.approx(1 / (2 * z * math.sqrt(1 - z * z)), rel=1e-7)


def test_hinf_with_feedthrough(rng):
    for _ in range(10):
        n = int(rng.integers(1, 5))
        sys = ClosedLoopSystem(random_stable(rng, n), rng.standard_normal((n, 2)),
                               rng.standard_normal((2, n)), rng.standard_normal((2, 2)))
        grid = np.concatenate(([0.0], np.logspace(-3, 3, 4000)))
        sweep = frequency_sweep_max(sys, grid)
        assert sweep <= hinf_norm(sys, tol=1e-8) <= sweep * 1.001


def test_hinf_rejects_bad_tol():
    with pytest.raises(ValueError):
        hinf_norm(first_order(), tol=0.0)


def test_sweep_examples():
    assert frequency_sweep_max(first_order(), [0.0]) == pytest.approx(1.0)
    assert frequency_sweep_max(first_order(), [0.0, 1.0]) == pytest.approx(1.0)
    assert frequency_sweep_max(first_order(), [1.0]) == pytest.approx(1 / math.sqrt(2))


def test_sweep_skips_singular_points():
    osc = ClosedLoopSystem([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
    with pytest.warns(RuntimeWarning):
        val = frequency_sweep_max(osc, [1.0, 0.0])
    assert val == pytest.approx(1.0)
    with pytest.warns(RuntimeWarning), pytest.raises(NumericalError):
        frequency_sweep_max(osc, [1.0])
    with pytest.raises(NumericalError):
        frequency_sweep_max(first_order(), [])
