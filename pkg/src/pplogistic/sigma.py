"""The two-parameter family Sigma(lambda, gamma) and its large-gamma behaviour.

``Sigma(lambda, gamma)`` is the principal eigenvalue with the extra potential
``-lambda*m + gamma*a``.  Its limit as gamma grows cannot be computed, so
``classify_sigma_infinity`` reads the trend over a doubling ramp of gammas:
increments that stay above a slope threshold mean divergence, a last
increment below a relative plateau threshold means a finite limit.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .discretization import Mesh, sample_levels
from .eigen import EigenResult, principal_eigenpair, richardson_eigenpair
from .propagator import MonodromyOperator

__all__ = [
    "DEFAULT_RAMP",
    "Classification",
    "SigmaCurve",
    "LambdaRoots",
    "ConcentrationProfile",
    "PreconditionError",
    "sigma_at",
    "sigma_along_ramp",
    "classify_sigma_infinity",
    "sigma_curve",
    "find_lambda_pm",
    "concentration_profile",
    "sign_condition",
]

log = logging.getLogger(__name__)

DEFAULT_RAMP = tuple(2.0**k for k in range(21))


class PreconditionError(ValueError):
    pass


def _state_at_t0(res: EigenResult, mesh: Mesh):
    return res.eigenfunction[0, mesh.state_slice]


def sigma_at(
    spec,
    mesh: Mesh,
    lam: float,
    gamma: float,
    richardson: bool = False,
    guess: EigenResult | None = None,
    scheme: str = "implicit-euler",
    **kw,
) -> EigenResult:
    """Principal eigenpair for the potential ``-lam*m + gamma*a``.

    ``guess`` (an earlier result on the same mesh) warm-starts both the shift
    and the power iteration.
    """
    if richardson:
        res = richardson_eigenpair(spec, mesh, lam, gamma, scheme=scheme, **kw)
    else:
        shift = guess.sigma if guess is not None else 0.0
        op = MonodromyOperator(spec, mesh, lam, gamma, scheme=scheme, shift=shift)
        v0 = _state_at_t0(guess, mesh) if guess is not None else None
        res = principal_eigenpair(op, v0=v0, **kw)
    if gamma < 0:
        res.warnings.append(f"negative gamma {gamma}")
    return res


def sigma_along_ramp(spec, mesh, lam, gammas, **kw):
    out = []
    guess = None
    for g in gammas:
        guess = sigma_at(spec, mesh, lam, g, guess=guess, **kw)
        out.append(guess)
    return out


@dataclass
class Classification:
    lam: float
    kind: str  # "finite" | "divergent" | "inconclusive"
    value: float  # plateau (finite) or slope per doubling (divergent), else last increment
    gammas: tuple
    sigmas: tuple

    @property
    def increments(self):
        return np.diff(self.sigmas)

    def record(self):
        return {"lambda": self.lam, "class": self.kind, "plateau_or_slope": self.value}


def classify_values(lam, gammas, sigmas, slope_threshold=0.5, plateau_rel=0.01) -> Classification:
    gammas = tuple(float(g) for g in gammas)
    sigmas = tuple(float(s) for s in sigmas)
    if len(gammas) < 4:
        raise ValueError("ramp needs at least four values")
    ratios = np.array(gammas[1:]) / np.array(gammas[:-1])
    if not np.allclose(ratios, 2.0):
        raise ValueError("ramp must be geometric with ratio 2")
    inc = np.diff(sigmas)
    last3 = inc[-3:]
    if np.all(last3 > slope_threshold):
        return Classification(lam, "divergent", float(np.mean(last3)), gammas, sigmas)
    if inc[-1] < plateau_rel * (1.0 + abs(sigmas[-1])):
        return Classification(lam, "finite", sigmas[-1], gammas, sigmas)
    return Classification(lam, "inconclusive", float(inc[-1]), gammas, sigmas)


def classify_sigma_infinity(spec, mesh, lam, ramp=DEFAULT_RAMP, slope_threshold=0.5, plateau_rel=0.01, **kw) -> Classification:
    results = sigma_along_ramp(spec, mesh, lam, ramp, **kw)
    return classify_values(lam, ramp, [r.sigma for r in results], slope_threshold, plateau_rel)


@dataclass
class SigmaCurve:
    lambda_grid: tuple
    gamma_ramp: tuple
    values: np.ndarray  # (len(lambda_grid), len(gamma_ramp))
    classifications: list = field(default_factory=list)

    def gamma_monotone_violations(self, tol=1e-7):
        d = np.diff(self.values, axis=1)
        return int(np.sum(d < -tol * (1.0 + np.abs(self.values[:, 1:]))))

    def lambda_concavity_violations(self, tol=1e-6):
        if len(self.lambda_grid) < 3:
            return 0
        second = self.values[2:] - 2 * self.values[1:-1] + self.values[:-2]
        return int(np.sum(second > tol))


def sigma_curve(spec, mesh, lambdas, ramp, classify=True, threads=1, **kw) -> SigmaCurve:
    """Sigma over a (lambda, gamma) grid; classification needs a doubling ramp."""
    lambdas = tuple(float(v) for v in lambdas)
    ramp = tuple(float(g) for g in ramp)

    def row(lam):
        return [r.sigma for r in sigma_along_ramp(spec, mesh, lam, ramp, **kw)]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, lambdas))
    else:
        rows = [row(lam) for lam in lambdas]
    values = np.array(rows)
    classes = []
    if classify:
        classes = [classify_values(lam, ramp, vals) for lam, vals in zip(lambdas, rows)]
    return SigmaCurve(lambdas, ramp, values, classes)


def sign_condition(spec, mesh):
    """Integrals over one period of min_x m and max_x m (trapezoid rule)."""
    m = sample_levels(spec, mesh, "m")
    lo = float(np.trapezoid(np.min(m, axis=1), mesh.times))
    hi = float(np.trapezoid(np.max(m, axis=1), mesh.times))
    return lo, hi, lo < 0.0 < hi


@dataclass
class LambdaRoots:
    lambda_minus: float | None
    lambda_plus: float | None
    lambda_max_location: float
    sigma_max: float
    scan: tuple
    signs: tuple
    sign_condition: tuple


def find_lambda_pm(spec, mesh, scan=(-50.0, 50.0), tol=None, n_scan=41, **kw) -> LambdaRoots:
    """Zeros of lambda -> Sigma(lambda, 0) inside the scan window."""
    cache = {}

    def sig(lam):
        lam = float(lam)
        if lam not in cache:
            cache[lam] = sigma_at(spec, mesh, lam, 0.0, **kw).sigma
        return cache[lam]

    grid = np.linspace(scan[0], scan[1], n_scan)
    vals = np.array([sig(v) for v in grid])
    cond = sign_condition(spec, mesh)
    if np.all(vals < 0):
        raise PreconditionError("no roots in window: Sigma(lambda, 0) < 0 on the whole scan")
    k = int(np.argmax(vals))
    lo_b = grid[max(k - 1, 0)]
    hi_b = grid[min(k + 1, n_scan - 1)]
    if hi_b > lo_b:
        opt = minimize_scalar(lambda v: -sig(v), bounds=(lo_b, hi_b), method="bounded", options={"xatol": 1e-8})
        lam0, smax = float(opt.x), -float(opt.fun)
        if smax < vals[k]:
            lam0, smax = float(grid[k]), float(vals[k])
    else:
        lam0, smax = float(grid[k]), float(vals[k])
    minus = plus = None
    for i in range(n_scan - 1):
        a, b = vals[i], vals[i + 1]
        if (a < 0) != (b < 0) or a == 0.0:
            xtol = tol if tol is not None else 1e-6 * (1.0 + abs(grid[i]))
            root = float(brentq(sig, grid[i], grid[i + 1], xtol=xtol))
            if a < 0 <= b:
                minus = root
            else:
                plus = root
    return LambdaRoots(minus, plus, lam0, smax, tuple(grid), tuple(np.sign(vals).astype(int)), cond)


@dataclass
class ConcentrationProfile:
    gammas: tuple
    sups: tuple
    eps_a: float

    @property
    def ratio(self):
        return self.sups[0] / self.sups[-1] if self.sups[-1] > 0 else float("inf")


def concentration_profile(spec, mesh, lam, gammas, eps_a=None, classification: Classification | None = None, **kw) -> ConcentrationProfile:
    """Sup of the normalised eigenfunction over ``[a >= eps_a]`` for each gamma."""
    a = sample_levels(spec, mesh, "a")
    if np.min(a[:, [0, -1]]) <= 0.0:
        raise PreconditionError("a must be positive on the lateral boundary")
    if classification is None:
        classification = classify_sigma_infinity(spec, mesh, lam, **kw)
    if classification.kind != "finite":
        raise PreconditionError(f"Sigma(lambda, inf) is not classified finite ({classification.kind})")
    if eps_a is None:
        eps_a = 0.5 * float(np.max(a))
    mask = a >= eps_a
    sups = []
    guess = None
    for g in sorted(gammas):
        guess = sigma_at(spec, mesh, lam, g, guess=guess, **kw)
        sups.append(guess.sup_over(mask))
    order = np.argsort(np.argsort(gammas))
    sups = [sups[i] for i in order]
    return ConcentrationProfile(tuple(float(g) for g in gammas), tuple(sups), eps_a)
