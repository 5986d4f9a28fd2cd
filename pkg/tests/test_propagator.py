import math

import numpy as np
import pytest

from pplogistic.discretization import build_mesh
from pplogistic.propagator import MonodromyOperator, apply_monodromy, periodic_solve, step

from conftest import make_spec


def heat_op(nx=49, nt=50, **kw):
    spec = make_spec(**kw)
    return MonodromyOperator(spec, build_mesh(spec, nx, nt))


def test_zero_maps_to_zero():
    op = heat_op()
    assert not np.any(apply_monodromy(op, np.zeros(op.n)))
    assert not np.any(step(np.zeros(op.n), 0.0, op.mesh.dt, op))


def test_step_preserves_nonnegativity():
    op = heat_op(drift="30 * cos(2 * pi * (x + t))", potential="-20")
    rng = np.random.default_rng(0)
    v = rng.uniform(0, 1, op.n)
    v[::3] = 0.0
    for j in range(op.mesh.nt):
        v = step(v, j * op.mesh.dt, op.mesh.dt, op)
        assert np.min(v) >= 0.0


def test_steps_compose_to_period_map():
    op = heat_op(potential="3 * sin(2 * pi * t) * x")
    v0 = np.linspace(0.1, 1.0, op.n)
    v = v0
    for j in range(op.mesh.nt):
        v = step(v, j * op.mesh.dt, op.mesh.dt, op)
    np.testing.assert_allclose(v, op.apply(v0), rtol=1e-12)


def test_heat_mode_decay():
    spec = make_spec()
    op = MonodromyOperator(spec, build_mesh(spec, 200, 4000))
    v0 = np.sin(np.pi * op.mesh.nodes)
    out = op.apply(v0)
    ratio = out / v0
    assert np.max(np.abs(ratio / math.exp(-math.pi**2) - 1.0)) <= 0.02


def test_constant_shift_scales_period_map():
    # on the Neumann constant mode the only error is (1 + s dt)^(-nt) against exp(-s T)
    op = heat_op(lo="robin 0", hi="robin 0")
    s = 2.0
    shifted = MonodromyOperator(op.spec, op.mesh, potential=s)
    v = np.ones(op.n)
    ratio = np.max(shifted.apply(v)) / np.max(op.apply(v))
    target = math.exp(-s * op.mesh.period)
    assert abs(ratio - target) <= 5 * op.mesh.dt * s * target


def test_dense_matrix_matches_apply():
    op = heat_op(nx=9, nt=8, drift="x")
    M = op.dense_matrix()
    v = np.arange(1.0, op.n + 1)
    np.testing.assert_allclose(M @ v, op.apply(v), rtol=1e-12)
    assert np.all(M >= 0)


def test_periodic_solve_zero_forcing():
    op = heat_op()
    sol = periodic_solve(op, 0.0)
    assert not np.any(sol.u)


def test_periodic_solve_steady_oracle():
    # -u'' = 1 with u(0) = u(1) = 0: u = x(1 - x)/2, reproduced exactly by central differences
    op = heat_op(nx=99, nt=16)
    sol = periodic_solve(op, 1.0)
    x = sol.x
    for j in range(sol.u.shape[0]):
        np.testing.assert_allclose(sol.u[j], x * (1 - x) / 2, atol=1e-9)
    assert sol.residual < 1e-9


def test_periodic_solve_positive_for_positive_forcing():
    op = heat_op(nx=30, nt=16, potential="2 + sin(2 * pi * t)")
    sol = periodic_solve(op, lambda x, t: np.maximum(0.0, np.sin(2 * np.pi * t)))
    assert sol.min_interior > 0.0


def test_periodic_solve_gmres_branch_agrees_with_dense():
    op = heat_op(nx=30, nt=16, potential="1 + x * cos(2 * pi * t)")
    f = lambda x, t: 1 + x * t
    dense = periodic_solve(op, f, dense_limit=64)
    iterative = periodic_solve(op, f, dense_limit=0)
    np.testing.assert_allclose(dense.u, iterative.u, rtol=1e-8, atol=1e-12)


def test_step_rejects_wrong_dt():
    op = heat_op()
    with pytest.raises(ValueError):
        step(np.ones(op.n), 0.0, 2 * op.mesh.dt, op)
