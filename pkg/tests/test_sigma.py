import numpy as np
import pytest

from pplogistic.discretization import build_mesh
from pplogistic.eigen import principal_eigenpair
from pplogistic.propagator import MonodromyOperator
from pplogistic.sigma import (
    DEFAULT_RAMP,
    PreconditionError,
    classify_sigma_infinity,
    classify_values,
    concentration_profile,
    find_lambda_pm,
    sigma_at,
    sigma_curve,
    sign_condition,
)

from conftest import PI2, make_spec

TUBE_LIMIT = PI2 / 0.09


def test_unweighted_value_is_principal_eigenvalue():
    spec = make_spec(m="x", a="x * x")
    mesh = build_mesh(spec, 40, 16)
    assert sigma_at(spec, mesh, 0.0, 0.0).sigma == pytest.approx(principal_eigenpair(MonodromyOperator(spec, mesh)).sigma, abs=1e-12)


@pytest.mark.parametrize("lam", [-3.0, 0.0, 4.0])
def test_unit_weight_adds_gamma(lam):
    spec = make_spec(m="1 + 0.5 * sin(2 * pi * t)")
    mesh = build_mesh(spec, 40, 16)
    s0 = sigma_at(spec, mesh, lam, 0.0)
    for g in (1.0, 37.0, 1e4):
        assert sigma_at(spec, mesh, lam, g, guess=s0).sigma - s0.sigma == pytest.approx(g, abs=1e-8 * (1 + g))


def test_weight_bounded_below_gives_linear_lower_bound():
    spec = make_spec(a="0.5 + 0.5 * sin(pi * x) ^ 2")
    mesh = build_mesh(spec, 40, 16)
    s0 = sigma_at(spec, mesh, 1.0, 0.0).sigma
    for g in (1.0, 10.0, 100.0):
        assert sigma_at(spec, mesh, 1.0, g).sigma >= s0 + 0.5 * g - 1e-6


def test_negative_gamma_is_flagged():
    spec = make_spec()
    assert any("negative gamma" in w for w in sigma_at(spec, build_mesh(spec, 20, 8), 0.0, -1.0).warnings)


def test_unit_weight_diverges():
    spec = make_spec()
    c = classify_sigma_infinity(spec, build_mesh(spec, 30, 8), 0.0)
    assert c.kind == "divergent"
    # slope per doubling equals gamma itself
    assert c.value == pytest.approx(np.mean(DEFAULT_RAMP[-4:-1]), rel=1e-9)


def test_tube_plateau(bundled):
    spec = bundled["tube"]
    c = classify_sigma_infinity(spec, build_mesh(spec), 0.0)
    assert c.kind == "finite"
    assert abs(c.value - TUBE_LIMIT) <= 0.1 * TUBE_LIMIT
    assert c.record() == {"lambda": 0.0, "class": "finite", "plateau_or_slope": c.value}


def test_blocked_lobes_diverge(bundled):
    spec = bundled["blocked"]
    c = classify_sigma_infinity(spec, build_mesh(spec), 0.0)
    assert c.kind == "divergent" and c.value >= 0.5


def test_ordering_chain_for_finite_case(bundled):
    spec = bundled["tube"]
    c = classify_sigma_infinity(spec, build_mesh(spec), 2.0)
    s0 = sigma_at(spec, build_mesh(spec), 2.0, 0.0).sigma
    assert all(s0 < s < c.value + 1e-9 for s in c.sigmas[1:-1])


def test_classifier_rules_on_synthetic_data():
    gammas = [2.0**k for k in range(6)]
    assert classify_values(0, gammas, [0, 1, 2, 3, 4, 5]).kind == "divergent"
    assert classify_values(0, gammas, [0, 5, 7, 7.5, 7.6, 7.601]).kind == "finite"
    c = classify_values(0, gammas, [0, 1, 2, 2.3, 2.5, 2.7])
    assert c.kind == "inconclusive" and c.value == pytest.approx(0.2)
    with pytest.raises(ValueError):
        classify_values(0, [1, 3, 9, 27], [0, 1, 2, 3])


def test_curve_monotone_in_gamma_concave_in_lambda():
    spec = make_spec(
        m="sin(2 * pi * (x - t)) + 0.2",
        a="min(1, 10 * max(0, abs(x - 0.5) - 0.1))",
        drift="2 * cos(2 * pi * t)",
        lo="robin 0.5",
    )
    curve = sigma_curve(spec, build_mesh(spec, 40, 16), np.linspace(-10, 10, 9), [0.0] + [2.0**k for k in range(6)], classify=False, threads=2)
    assert curve.values.shape == (9, 7)
    assert curve.gamma_monotone_violations() == 0
    assert curve.lambda_concavity_violations() == 0


def test_threads_do_not_change_values():
    spec = make_spec(m="cos(2 * pi * x)", a="x")
    mesh = build_mesh(spec, 30, 8)
    a = sigma_curve(spec, mesh, [-1.0, 0.0, 1.0], [2.0**k for k in range(5)], threads=1)
    b = sigma_curve(spec, mesh, [-1.0, 0.0, 1.0], [2.0**k for k in range(5)], threads=3)
    assert np.array_equal(a.values, b.values)


def test_lambda_plus_for_heat():
    spec = make_spec(grid="99 16")
    roots = find_lambda_pm(spec, build_mesh(spec))
    assert roots.lambda_minus is None
    assert roots.lambda_plus == pytest.approx(PI2, rel=0.005)


def test_lambda_minus_only_for_negative_m():
    spec = make_spec(grid="99 16", m="-1")
    roots = find_lambda_pm(spec, build_mesh(spec))
    assert roots.lambda_plus is None
    assert roots.lambda_minus == pytest.approx(-PI2, rel=0.005)


def test_symmetric_roots_for_cosine_weight(bundled):
    spec = bundled["cos_weight"]
    mesh = build_mesh(spec)
    roots = find_lambda_pm(spec, mesh)
    assert sigma_at(spec, mesh, 0.0, 0.0).sigma == pytest.approx(PI2, rel=1e-3)
    assert roots.lambda_minus < 0 < roots.lambda_plus
    assert roots.lambda_minus == pytest.approx(-roots.lambda_plus, rel=0.01)
    assert roots.sign_condition[2]


def test_zero_mean_weight_with_neumann_ends_touches_zero_only_at_origin():
    spec = make_spec(m="cos(2 * pi * x)", lo="robin 0", hi="robin 0")
    mesh = build_mesh(spec, 49, 8)
    assert abs(sigma_at(spec, mesh, 0.0, 0.0).sigma) <= 1e-10
    assert all(sigma_at(spec, mesh, lam, 0.0).sigma < 0 for lam in (-20.0, -1.0, 1.0, 20.0))


def test_no_roots_when_always_negative():
    spec = make_spec(potential="-100", m="0")
    with pytest.raises(PreconditionError, match="no roots"):
        find_lambda_pm(spec, build_mesh(spec, 20, 8), scan=(-5, 5), n_scan=5)


def test_sign_condition_integrals():
    spec = make_spec(m="sin(2 * pi * t)")
    lo, hi, ok = sign_condition(spec, build_mesh(spec, 9, 64))
    assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(0.0, abs=1e-12)
    assert not ok


def test_concentration_in_tube(bundled):
    spec = bundled["tube"]
    prof = concentration_profile(spec, build_mesh(spec), 0.0, [1.0, 10.0, 100.0, 1e3, 1e4])
    assert prof.ratio >= 10.0
    assert all(a >= b for a, b in zip(prof.sups, prof.sups[1:]))


def test_concentration_unweighted_entry_at_most_one(bundled):
    spec = bundled["tube"]
    prof = concentration_profile(spec, build_mesh(spec), 0.0, [0.0, 1e4])
    assert 0.0 < prof.sups[0] <= 1.0


def test_concentration_refused_without_refuge():
    spec = make_spec()
    with pytest.raises(PreconditionError):
        concentration_profile(spec, build_mesh(spec, 20, 8), 0.0, [1.0, 10.0])


@pytest.mark.parametrize("name, kind", [("tube", "finite"), ("blocked", "divergent")])
def test_classification_constant_across_lambda(bundled, name, kind):
    spec = bundled[name]
    curve = sigma_curve(spec, build_mesh(spec), [-10.0, 0.0, 10.0], DEFAULT_RAMP)
    assert [c.kind for c in curve.classifications] == [kind] * 3
    if kind == "finite":
        plateau = [c.value for c in curve.classifications]
        assert plateau[0] - 2 * plateau[1] + plateau[2] <= 1e-3
