"""Desk-scale acceptance checks over the bundled scenarios.

Each ``check_*`` function returns a ``CriterionResult`` holding a pass flag,
a one-line summary and a table of the numbers behind it.  The CLI ``suite``
command writes the tables as CSV; the test suite asserts the flags.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .discretization import Mesh, build_mesh
from .eigen import dense_oracle, principal_eigenpair, richardson_eigenpair
from .expr import Expr
from .logistic import existence_verdict, sandwich, solve_periodic_logistic, uniqueness_probe
from .perturb import sigma_sequence
from .propagator import MonodromyOperator
from .scenario import BoundaryCondition, ScenarioError, ScenarioSpec, WeightSpec, load_scenario
from .sigma import classify_sigma_infinity, concentration_profile, sigma_at, sigma_curve
from .zeroset import build_zero_set_graph, tau_path_exists

__all__ = ["CriterionResult", "bundled_suite_dir", "load_suite", "random_scenario", "CHECKS", "REQUIRED", "run_checks"]

PI2 = math.pi**2


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    header: tuple = ()
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self):
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}: {self.summary}"


def bundled_suite_dir() -> Path:
    return Path(str(resources.files("pplogistic") / "scenarios"))


def load_suite(directory=None) -> dict:
    directory = Path(directory) if directory is not None else bundled_suite_dir()
    return {p.stem: load_scenario(p) for p in sorted(directory.glob("*.scn"))}


def _r(rng, lo, hi):
    return round(float(rng.uniform(lo, hi)), 4)


def random_scenario(rng: np.random.Generator, with_zero_set: bool = True) -> ScenarioSpec:
    """A smooth, time-dependent scenario with random coefficients and boundary types."""
    d = f"{_r(rng, 0.8, 1.2)} + {_r(rng, -0.3, 0.3)} * sin(2 * pi * (x + t))"
    b = f"{_r(rng, -2, 2)} * cos(2 * pi * t) + {_r(rng, -1, 1)} * x"
    c = f"{_r(rng, -3, 3)} + {_r(rng, -3, 3)} * sin(2 * pi * t) * x"
    m = f"{_r(rng, -1, 1)} + sin(2 * pi * (x - {_r(rng, 0, 1)})) * cos(2 * pi * t)"
    if with_zero_set:
        w = _r(rng, 0.1, 0.2)
        a = f"min(1, 20 * max(0, abs(x - 0.5 - 0.15 * sin(2 * pi * t)) - {w}))"
    else:
        a = f"1 + {_r(rng, -0.5, 0.5)} * cos(2 * pi * (x + t))"

    def bc():
        return BoundaryCondition("dirichlet") if rng.uniform() < 0.5 else BoundaryCondition("robin", _r(rng, -0.5, 2.0))

    return ScenarioSpec(
        diffusion=Expr.parse(d),
        drift=Expr.parse(b),
        potential=Expr.parse(c),
        m=Expr.parse(m),
        weight=WeightSpec(Expr.parse(a)),
        bc_lo=bc(),
        bc_hi=bc(),
    )


def check_eigen_anchor(suite) -> CriterionResult:
    heat = suite["heat"]
    res = richardson_eigenpair(heat, build_mesh(heat, 200, 512))
    rel = abs(res.sigma - PI2) / PI2
    neu = suite["neumann"]
    s_neu = principal_eigenpair(MonodromyOperator(neu, build_mesh(neu))).sigma
    ok = rel <= 0.005 and abs(s_neu) <= 1e-6
    rows = [("heat", res.sigma, PI2, rel), ("neumann", s_neu, 0.0, abs(s_neu))]
    return CriterionResult(
        1, "eigenvalue anchors", ok, f"heat rel err {rel:.2e}, neumann |sigma| {abs(s_neu):.1e}",
        ("case", "sigma", "exact", "error"), rows,
    )


def check_shift_identity(suite, seed=11, count=5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        spec = random_scenario(rng)
        mesh = build_mesh(spec, 80, 64)
        s0 = principal_eigenpair(MonodromyOperator(spec, mesh)).sigma
        s5 = principal_eigenpair(MonodromyOperator(spec, mesh, potential=5.0)).sigma
        rows.append((i, spec.digest(), s0, s5, abs(s5 - s0 - 5.0)))
    worst = max(r[-1] for r in rows)
    return CriterionResult(
        2, "shift identity", worst <= 1e-8, f"max |sigma(c+5) - sigma(c) - 5| = {worst:.2e}",
        ("scenario", "digest", "sigma", "sigma_plus_5", "defect"), rows,
    )


def check_oracle(suite, seed=23, count=10) -> CriterionResult:
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        spec = random_scenario(rng, with_zero_set=bool(i % 2))
        op = MonodromyOperator(spec, build_mesh(spec, 40, 32), lam=1.0, gamma=2.0)
        p = principal_eigenpair(op, tol=1e-12)
        d = dense_oracle(op)
        rows.append((i, spec.digest(), p.rho, d.rho, abs(p.rho - d.rho) / d.rho))
    worst = max(r[-1] for r in rows)
    return CriterionResult(
        3, "power iteration vs dense oracle", worst <= 1e-10, f"max relative rho difference {worst:.2e}",
        ("scenario", "digest", "rho_power", "rho_dense", "rel_diff"), rows,
    )


def check_monotonicity(suite, seed=37) -> CriterionResult:
    rng = np.random.default_rng(seed)
    specs = {"tube": suite["tube"], "random_a": random_scenario(rng), "random_b": random_scenario(rng)}
    lambdas = np.linspace(-20.0, 20.0, 21)
    gammas = [0.0] + [2.0**k for k in range(10)]
    rows = []
    bad = 0
    for name, spec in specs.items():
        curve = sigma_curve(spec, build_mesh(spec, 60, 32), lambdas, gammas, classify=False)
        mono = curve.gamma_monotone_violations(1e-7)
        conc = curve.lambda_concavity_violations(1e-6)
        bad += mono + conc
        second = curve.values[2:] - 2 * curve.values[1:-1] + curve.values[:-2]
        rows.append((name, "grid", mono, conc, float(np.max(second))))
    # domain monotonicity on nested subintervals with Dirichlet ends and matched spacing
    base = specs["random_a"]
    h = 0.01
    dirichlet = BoundaryCondition("dirichlet")
    prev = sigma_at(base, build_mesh(base, 99, 32), 0.0, 0.0).sigma
    chain = [prev]
    for k in (1, 2, 3):
        lo, hi = 0.1 * k, 1.0 - 0.1 * k
        sub = base.replace(x_lo=lo, x_hi=hi, bc_lo=dirichlet, bc_hi=dirichlet)
        s = sigma_at(sub, build_mesh(sub, round((hi - lo) / h) - 1, 32), 0.0, 0.0).sigma
        chain.append(s)
        rows.append(("random_a", f"[{lo:.1f},{hi:.1f}]", int(not s > prev), 0, s))
        bad += int(not s > prev)
        prev = s
    return CriterionResult(
        4, "monotonicity and concavity", bad == 0, f"{bad} violations; nested-domain sigmas {np.round(chain, 4).tolist()}",
        ("scenario", "case", "monotone_violations", "concavity_violations", "value"), rows,
    )


def check_linear_growth(suite) -> CriterionResult:
    heat = suite["heat"]
    mesh = build_mesh(heat, 60, 32)
    rows = []
    worst = 0.0
    for lam in (-5.0, 0.0, 5.0):
        s0 = sigma_at(heat, mesh, lam, 0.0)
        guess = s0
        for k in range(21):
            g = 2.0**k
            guess = sigma_at(heat, mesh, lam, g, guess=guess)
            excess = abs(guess.sigma - s0.sigma - g) / (1.0 + g)
            worst = max(worst, excess)
            rows.append((lam, g, guess.sigma, excess))
    return CriterionResult(
        5, "linear growth for a = 1", worst <= 1e-7, f"max |Sigma - Sigma0 - gamma| / (1 + gamma) = {worst:.2e}",
        ("lambda", "gamma", "sigma", "scaled_defect"), rows,
    )


DICHOTOMY = (("tube", True), ("blocked", False), ("chain2", False), ("chain3", False), ("side_bump", True), ("lobes_gap", False))


def check_dichotomy(suite) -> CriterionResult:
    rows = []
    ok = True
    for name, expect_path in DICHOTOMY:
        spec = suite[name]
        mesh = build_mesh(spec)
        cert = tau_path_exists(build_zero_set_graph(spec, mesh))
        cls = classify_sigma_infinity(spec, mesh, 0.0)
        consistent = cert.exists == (cls.kind == "finite") and cert.exists == expect_path
        if cls.kind == "divergent":
            consistent &= cls.value >= 0.5
        if name == "tube":
            target = PI2 / 0.09
            consistent &= cls.kind == "finite" and abs(cls.value - target) <= 0.1 * target
        ok &= consistent
        rows.append((name, cert.verdict, cls.kind, cls.value, int(consistent)))
    return CriterionResult(
        6, "path / classifier dichotomy", ok, "; ".join(f"{r[0]}: {r[1]}, {r[2]} {r[3]:.3f}" for r in rows),
        ("scenario", "path", "class", "plateau_or_slope", "consistent"), rows,
    )


def check_concentration(suite) -> CriterionResult:
    spec = suite["tube"]
    mesh = build_mesh(spec)
    prof = concentration_profile(spec, mesh, 0.0, [1.0, 10.0, 100.0, 1e3, 1e4])
    rows = [(g, s) for g, s in zip(prof.gammas, prof.sups)]
    return CriterionResult(
        7, "eigenfunction concentration", prof.ratio >= 10.0, f"sup ratio gamma=1 / gamma=1e4 = {prof.ratio:.2f}",
        ("gamma", "sup_on_a_positive"), rows,
    )


def _ode_oracle(lam, u0, periods):
    """Period-end values of u' = lam sin(2 pi t) u - u^2, integrated to near machine precision."""
    sol = solve_ivp(
        lambda t, u: lam * np.sin(2 * np.pi * t) * u - u * u,
        (0.0, float(periods)),
        [u0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        t_eval=np.arange(periods + 1, dtype=float),
    )
    return [float(v) for v in sol.y[0]]


def check_logistic(suite) -> CriterionResult:
    neu = suite["neumann"]
    mesh = build_mesh(neu)
    rows = []
    ok = True
    for lam in (0.5, 1.0, 2.0, -0.5):
        sol = solve_periodic_logistic(neu, mesh, lam, 0.1)
        target = max(lam, 0.0)
        err = float(np.max(np.abs(sol.u - target)))
        ok &= sol.converged and err <= 1e-6
        rows.append(("neumann", lam, target, err))
    mt = suite["neumann_mt"]
    mesh = build_mesh(mt)
    lam, u0, periods = 2.0, 0.5, 3
    oracle = _ode_oracle(lam, u0, periods)
    state = u0
    worst = 0.0
    for p in range(periods):
        sol = solve_periodic_logistic(mt, mesh, lam, state, max_periods=1)
        state = sol.u[-1]
        err = float(np.max(np.abs(state - oracle[p + 1])))
        worst = max(worst, err)
        rows.append(("m(t) oracle", lam, oracle[p + 1], err))
    ok &= worst <= 1e-4
    return CriterionResult(
        8, "logistic anchors", ok, f"constant fixed points and decay within 1e-6; ODE oracle max error {worst:.1e}",
        ("case", "lambda", "reference", "error"), rows,
    )


# (scenario, lambda, expected, nt or None for the scenario default); the
# implicit logistic step needs dt * lambda * max m below one
VERDICTS = (
    ("heat", 2 * PI2, "exists", None),
    ("tube", 50.0, "exists", None),
    ("heat", PI2 / 2, "not-exists", None),
    ("tube", 5.0, "not-exists", None),
    ("tube", 150.0, "not-exists", 256),
    ("moving_tube", 200.0, "not-exists", None),
)


def check_verdicts(suite) -> CriterionResult:
    rows = []
    ok = True
    for name, lam, expected, nt in VERDICTS:
        spec = suite[name]
        mesh = build_mesh(spec, nt=nt)
        v = existence_verdict(spec, mesh, lam)
        m0, m_inf = v.margins()
        good = v.agree and v.predicted == expected and m0 >= 0.1 and m_inf >= 0.1
        uniq = sand = float("nan")
        if expected == "exists":
            probe = uniqueness_probe(spec, mesh, lam)
            uniq = probe.max_distance
            sw = sandwich(spec, mesh, lam, v.runs[-1][2].u)
            sand = min(sw.lower_gap, sw.upper_gap)
            good &= probe.unique and sw.holds(10 * probe.tol)
        ok &= good
        plateau = v.plateau if v.plateau is not None else float("nan")
        rows.append((name, lam, v.sigma_zero, plateau, v.predicted, v.observed, uniq, sand, int(good)))
    return CriterionResult(
        9, "existence verdicts", ok, "; ".join(f"{r[0]} lambda={r[1]:.4g}: {r[4]}/{r[5]}" for r in rows),
        ("scenario", "lambda", "sigma0", "plateau", "predicted", "observed", "uniqueness_distance", "sandwich_gap", "ok"),
        rows,
    )


def check_dilation(suite) -> CriterionResult:
    heat = suite["heat"]
    n_list = (4, 8, 16, 32, 64)
    seq = sigma_sequence(heat, 0.0, 0.0, n_list, mesh=build_mesh(heat, 255, 4))
    rows = []
    ok = seq.strictly_increasing() and seq.all_below()
    for n, s in zip(n_list, seq.sigmas):
        exact = PI2 / (1 + 2 / n) ** 2
        rel = abs(s - exact) / exact
        ok &= rel <= 0.005
        rows.append((n, s, exact, rel))
    rows.append(("domain", seq.sigma, PI2, abs(seq.sigma - PI2) / PI2))
    return CriterionResult(
        10, "dilated domains", ok, f"increasing={seq.strictly_increasing()}, below={seq.all_below()}",
        ("n", "sigma_n", "closed_form", "rel_error"), rows,
    )


CHECKS = (
    check_eigen_anchor,
    check_shift_identity,
    check_oracle,
    check_monotonicity,
    check_linear_growth,
    check_dichotomy,
    check_concentration,
    check_logistic,
    check_verdicts,
    check_dilation,
)


REQUIRED = ("heat", "neumann", "neumann_mt", "tube", "moving_tube", "blocked", "chain2", "chain3", "side_bump", "lobes_gap")


def run_checks(suite=None, only=None):
    suite = suite if suite is not None else load_suite()
    missing = [name for name in REQUIRED if name not in suite]
    if missing:
        raise ScenarioError(f"suite directory lacks scenarios: {', '.join(missing)}")
    out = []
    for check in CHECKS:
        if only is not None and check.__name__ not in only:
            continue
        start = time.perf_counter()
        result = check(suite)
        result.seconds = time.perf_counter() - start
        out.append(result)
    return out
