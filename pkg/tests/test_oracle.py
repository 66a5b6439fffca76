import math

import numpy as np
import pytest

from multiechelon import EchelonSpec, SolverError, build_system, solve_trajectory
from multiechelon.echelon import linear_rhs
from multiechelon.oracle import finite_difference_jacobian, rk4_integrate, rk4_sample

import golden


def decay(t, x):
    return -x


def test_scalar_decay():
    series = rk4_integrate(decay, [1.0], 1.0, step=1e-3)
    assert series.times[-1] == 1.0
    assert series.levels[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert series.levels[0, 0] == 1.0


def test_last_step_shortened():
    series = rk4_integrate(decay, [1.0], 1.05, step=0.1)
    assert series.times[-1] == 1.05
    assert series.times[-2] == pytest.approx(1.0)
    assert series.levels[-1, 0] == pytest.approx(math.exp(-1.05), abs=1e-6)


def test_fourth_order_convergence():
    A = np.array([[-0.5, 0.2], [0.1, -0.8]])
    x0 = np.array([1.0, 2.0])
    rhs = lambda t, x: A @ x
    vals, vecs = np.linalg.eig(A)
    truth = (vecs @ np.diag(np.exp(vals * 3.0)) @ np.linalg.solve(vecs, x0)).real
    e1 = np.linalg.norm(rk4_integrate(rhs, x0, 3.0, 0.2).levels[-1] - truth)
    e2 = np.linalg.norm(rk4_integrate(rhs, x0, 3.0, 0.1).levels[-1] - truth)
    assert 8 <= e1 / e2 <= 32


def test_table1_first_row_by_integration():
    d = golden.THREE_WAREHOUSE
    sys = build_system(EchelonSpec.from_arrays(d["L"], d["mu"], d["theta"], d["lam"], d["gamma"]))
    y10 = rk4_integrate(linear_rhs(sys), d["y0"], 10.0).levels[-1]
    np.testing.assert_allclose(y10, golden.TABLE1[10], atol=1e-3)


def test_sample_matches_closed_form():
    d = golden.THREE_WAREHOUSE
    spec = EchelonSpec.from_arrays(d["L"], d["mu"], d["theta"], d["lam"], d["gamma"])
    times = [0.0, 2.5, 10.0, 40.0]
    rk = rk4_sample(linear_rhs(build_system(spec)), d["y0"], times)
    closed = solve_trajectory(spec, d["y0"], times)
    np.testing.assert_allclose(rk.levels, closed.levels, rtol=1e-9)
    with pytest.raises(ValueError):
        rk4_sample(decay, [1.0], [2.0, 1.0])


def test_rk4_errors():
    with pytest.raises(ValueError):
        rk4_integrate(decay, [1.0], 1.0, step=0.0)
    with pytest.raises(ValueError):
        rk4_integrate(decay, [1.0], -1.0)
    with pytest.raises(SolverError), np.errstate(over="ignore", invalid="ignore"):
        rk4_integrate(lambda t, x: x * x, [10.0], 5.0, step=0.1)


def test_fd_jacobian_linear_and_constant():
    rng = np.random.default_rng(0)
    A, b = rng.normal(size=(4, 3)), rng.normal(size=4)
    J = finite_difference_jacobian(lambda x: A @ x + b, rng.normal(size=3))
    np.testing.assert_allclose(J, A, atol=1e-9)
    Z = finite_difference_jacobian(lambda x: np.array([1.0, 2.0]), np.array([3.0, 4.0, 5.0]))
    np.testing.assert_array_equal(Z, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        finite_difference_jacobian(lambda x: x, np.ones(2), h=0)
