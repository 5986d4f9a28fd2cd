import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pplogistic.discretization import build_mesh
from pplogistic.logistic import (
    SolverError,
    construct_subsolution,
    construct_supersolution,
    discrete_residual,
    existence_verdict,
    sandwich,
    solve_periodic_logistic,
    uniqueness_probe,
)
from pplogistic.sigma import PreconditionError, sigma_at

from conftest import PI2, make_spec

NEUMANN = dict(lo="robin 0", hi="robin 0", grid="9 16")


def neumann(**kw):
    spec = make_spec(**{**NEUMANN, **kw})
    return spec, build_mesh(spec)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_constant_fixed_point(lam):
    spec, mesh = neumann()
    sol = solve_periodic_logistic(spec, mesh, lam, 0.1)
    assert sol.converged and sol.status == "converged"
    assert np.max(np.abs(sol.u - lam)) <= 1e-6
    assert sol.positive


def test_decay_for_negative_lambda():
    spec, mesh = neumann()
    sol = solve_periodic_logistic(spec, mesh, -0.5, 0.1)
    assert sol.sup <= 1e-6


def test_scalar_periodic_ode():
    spec, mesh = neumann(m="sin(2 * pi * t)", grid="3 16384")
    ref = solve_ivp(lambda t, u: 2 * np.sin(2 * np.pi * t) * u - u * u, (0, 2), [0.5], method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    sol = solve_periodic_logistic(spec, mesh, 2.0, 0.5, max_periods=1)
    sol = solve_periodic_logistic(spec, mesh, 2.0, sol.u[-1], max_periods=1)
    exact = ref.sol(1.0 + sol.t)[0]
    assert np.max(np.abs(sol.u - exact[:, None])) <= 1e-4


def test_scalar_ode_with_zero_mean_vanishes_with_dt():
    # implicit Euler adds a growth of about dt * lambda^2 * mean(m^2) / 2 per period,
    # so the discrete periodic state is O(dt) and disappears as dt -> 0
    sups = []
    for nt in (256, 512):
        spec, mesh = neumann(m="sin(2 * pi * t)", grid=f"3 {nt}")
        sol = solve_periodic_logistic(spec, mesh, 2.0, 0.5, max_periods=5000)
        assert sol.converged
        sups.append(sol.sup)
    assert sups[0] / sups[1] == pytest.approx(2.0, rel=0.1)


def test_residual_vanishes_at_solution():
    spec = make_spec(grid="49 32")
    mesh = build_mesh(spec)
    sol = solve_periodic_logistic(spec, mesh, 2 * PI2, 1.0)
    assert np.max(np.abs(discrete_residual(spec, mesh, 2 * PI2, sol.u))) <= 1e-5
    assert sol.positive
    assert np.all(sol.normal_derivative < 0)


def test_subsolution_constant_case():
    spec, mesh = neumann()
    sub = construct_subsolution(spec, mesh, 1.0)
    assert sub.sigma_zero == pytest.approx(-1.0)
    assert sub.epsilon == 0.5
    r = discrete_residual(spec, mesh, 1.0, sub.field)
    np.testing.assert_allclose(r, -0.25, atol=1e-8)
    assert sub.max_residual == pytest.approx(-0.5, abs=1e-8)


def test_subsolution_needs_negative_sigma():
    spec, mesh = neumann()
    with pytest.raises(PreconditionError):
        construct_subsolution(spec, mesh, -1.0)


def test_supersolution_constant_case():
    spec, mesh = neumann()
    sup = construct_supersolution(spec, mesh, 1.0, 2.0)
    assert sup.n is None
    assert sup.sigma_n == pytest.approx(1.0)
    assert sup.kappa == 4.0
    # kappa * (sigma + a (f(kappa) - gamma)) = 4 * (1 + 2)
    np.testing.assert_allclose(discrete_residual(spec, mesh, 1.0, sup.field), 12.0, atol=1e-8)


def test_heat_shift_makes_sigma_positive():
    spec = make_spec(grid="99 16")
    mesh = build_mesh(spec)
    s0 = sigma_at(spec, mesh, 0.0, 0.0).sigma
    # Sigma(lambda, gamma) = sigma - lambda + gamma, so gamma = pi^2 + 1 leaves about 1
    s = sigma_at(spec, mesh, 2 * PI2, PI2 + 1).sigma
    assert s == pytest.approx(s0 - PI2 + 1, abs=1e-8)
    assert s == pytest.approx(1.0, abs=0.01)


def test_dilated_supersolution_positive_on_closed_domain(bundled):
    spec = bundled["tube"]
    mesh = build_mesh(spec, 199, 16)
    sup = construct_supersolution(spec, mesh, 50.0, 4096.0, n=8)
    assert sup.mu > 0
    assert np.min(sup.field) > 0
    assert sup.min_residual > 0


def test_supersolution_needs_positive_dilated_sigma():
    spec = make_spec(grid="99 16")
    with pytest.raises(PreconditionError):
        construct_supersolution(spec, build_mesh(spec), 2 * PI2, 0.0)


def test_heat_existence_and_sandwich():
    spec = make_spec(grid="99 32")
    mesh = build_mesh(spec)
    v = existence_verdict(spec, mesh, 2 * PI2)
    assert v.predicted == "exists" and v.observed == "exists" and v.agree
    sol = v.runs[-1][2]
    assert sol.residual <= 1e-8
    sw = sandwich(spec, mesh, 2 * PI2, sol.u)
    assert sw.holds()


def test_heat_nonexistence():
    spec = make_spec(grid="99 32")
    v = existence_verdict(spec, build_mesh(spec), PI2 / 2)
    assert v.predicted == "not-exists" and v.agree
    assert all(run[2].sup <= 1e-6 for run in v.runs)


def test_refuge_too_large_for_lambda(bundled):
    spec = bundled["tube"]
    v = existence_verdict(spec, build_mesh(spec, nt=256), 150.0)
    assert v.sigma_zero < 0
    assert v.plateau < 0
    assert v.predicted == "not-exists"
    assert v.observed == "not-exists-bounded"
    assert any(run[2].status in ("blowup", "stagnated") for run in v.runs)


def test_refuge_small_enough(bundled):
    spec = bundled["tube"]
    v = existence_verdict(spec, build_mesh(spec), 50.0)
    assert v.predicted == "exists" and v.agree
    m0, m_inf = v.margins()
    assert m0 >= 0.1 and m_inf >= 0.1


def test_critical_lambda_is_inconclusive():
    spec, mesh = neumann()
    v = existence_verdict(spec, mesh, 0.0)
    assert v.predicted == "inconclusive"
    assert not v.agree


def test_uniqueness_constant_case():
    spec, mesh = neumann()
    probe = uniqueness_probe(spec, mesh, 1.0)
    assert probe.unique
    for sol in probe.solutions:
        assert np.max(np.abs(sol.u - 1.0)) <= 1e-6


def test_uniqueness_heat():
    spec = make_spec(grid="49 32")
    probe = uniqueness_probe(spec, build_mesh(spec), 2 * PI2)
    assert probe.conclusive and probe.max_distance <= 1e-6


def test_large_step_loses_positivity():
    spec, _ = neumann()
    with pytest.raises(SolverError, match="positivity"):
        solve_periodic_logistic(spec, build_mesh(spec, 9, 4), 40.0, 1.0)


def test_superlinear_nonlinearity():
    spec, mesh = neumann(f="power 2")
    sol = solve_periodic_logistic(spec, mesh, 4.0, 0.1)
    # 0 = lambda u - u^3 at u = sqrt(lambda)
    assert np.max(np.abs(sol.u - 2.0)) <= 1e-6
