import numpy as np
import pytest

from pplogistic.scenario import (
    BoundaryCondition,
    ScenarioError,
    eval_field,
    parse_scenario,
    serialize_scenario,
    validate_hypotheses,
)

from conftest import make_spec, scenario_text


def test_minimal_file():
    spec = make_spec()
    assert (spec.x_lo, spec.x_hi, spec.period) == (0.0, 1.0, 1.0)
    assert spec.bc_lo.is_dirichlet and spec.bc_hi.is_dirichlet
    assert eval_field(spec, "diffusion", 0.3, 0.2) == 1.0
    assert eval_field(spec, "a", 0.3, 0.2) == 1.0
    assert spec.nonlinearity.f(2.0) == 2.0


def test_round_trip_preserves_digest():
    spec = make_spec(m="cos(2 * pi * x)", lo="robin -0.5", bumps=["0.5 0.5 0.2 0.3 1"], a="0")
    again = parse_scenario(serialize_scenario(spec))
    assert again.digest() == spec.digest()
    assert again.bc_lo == BoundaryCondition("robin", -0.5)


def test_single_bump():
    spec = make_spec(a="0", bumps=["0.5 0.5 0.2 0.3 1"])
    assert len(spec.weight.bumps) == 1
    assert eval_field(spec, "a", 0.5, 0.5) == pytest.approx(1.0)
    assert eval_field(spec, "a", 0.1, 0.5) == 0.0


def test_bump_amplitude_at_centre():
    spec = make_spec(a="0", bumps=["0.5 0.5 0.2 0.3 2.5 poly"])
    assert eval_field(spec, "a", 0.5, 0.5) == pytest.approx(2.5)


def test_bump_wraps_in_time():
    spec = make_spec(a="0", bumps=["0.5 0.95 0.2 0.1 1 flat"])
    assert eval_field(spec, "a", 0.5, 0.02) > 0.0


def test_overlapping_bumps_rejected():
    with pytest.raises(ScenarioError, match="not disjoint"):
        make_spec(a="0", bumps=["0.4 0.5 0.2 0.3 1", "0.6 0.5 0.2 0.3 1"])


def test_periodicity_of_fields():
    spec = make_spec(m="sin(2 * pi * t) + x")
    assert eval_field(spec, "m", 0.4, 0.3) == pytest.approx(eval_field(spec, "m", 0.4, 1.3))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("domain = 0 1\nwhat = 3\n", "unknown key"),
        ("domain = 1 0\n", "x_lo < x_hi"),
        ("domain = 0 1\ndomain = 0 2\n", "duplicate"),
        ("bc.lo = neumann\n", "dirichlet"),
        ("m = sin(\n", "m"),
        ("grid = 9.5 4\n", "integers"),
        ("f = power 0.5\n", ">= 1"),
        ("a.bump = 0.5 0.5 0.2\n", "expected 5"),
    ],
)
def test_parse_errors_name_the_problem(text, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse_scenario(text)


def test_parse_error_reports_line():
    with pytest.raises(ScenarioError) as info:
        parse_scenario(scenario_text() + "bogus = 1\n")
    assert info.value.line == 12


def test_hypotheses_pass_for_heat():
    report = validate_hypotheses(make_spec(), (20, 8))
    assert report.ok
    assert all(c.passed for c in report.checks)


def test_degenerate_diffusion_fails():
    report = validate_hypotheses(make_spec(diffusion="x"), (20, 8))
    assert not report["ellipticity"].passed
    assert not report.ok


def test_zero_weight_fails():
    report = validate_hypotheses(make_spec(a="0"), (20, 8))
    assert not report["weight_a"].passed


def test_time_is_read_modulo_the_period():
    spec = make_spec(m="t")
    assert eval_field(spec, "m", 0.5, 1.25) == pytest.approx(0.25)
    assert validate_hypotheses(spec, (20, 8))["periodicity"].passed


def test_boundary_positivity_is_reported_not_required():
    spec = make_spec(a="max(0, 0.5 - abs(x - 0.5))")
    report = validate_hypotheses(spec, (20, 8))
    assert not report["boundary_positive_a"].passed
    assert report.ok


def test_eval_field_outside_domain():
    with pytest.raises(ScenarioError):
        eval_field(make_spec(), "m", 1.5, 0.0)


def test_sample_matches_pointwise():
    spec = make_spec(drift="x * cos(2 * pi * t)")
    x = np.linspace(0, 1, 5)
    vals = spec.sample("drift", x, np.full_like(x, 0.5))
    assert vals == pytest.approx([eval_field(spec, "drift", xi, 0.5) for xi in x])
