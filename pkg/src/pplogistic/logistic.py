"""Positive periodic solutions of the weighted logistic equation.

The problem is ``u_t + L u = lambda m u - a f(u) u`` with ``f(u) = u^p``.
Time marching is fully implicit: each step solves

    (I + dt (A_j - lambda m_j)) w + dt a_j f(w) w = u_prev

by Newton's method with tridiagonal Jacobians.  The map ``u_prev -> w`` is
order preserving, and any constant fixed point of the continuous problem is
an exact fixed point of the discrete one.

Existence is read off the principal eigenvalues: a positive periodic
solution exists when ``Sigma(lambda, 0) < 0 < Sigma(lambda, inf)``.  The
``existence_verdict`` compares that prediction with what the solver does.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .discretization import Mesh, assemble_levels, sample_levels
from .perturb import dilated_mesh, dilated_scenario, restrict
from .sigma import DEFAULT_RAMP, PreconditionError, classify_sigma_infinity, sigma_at

__all__ = [
    "PeriodicSolution",
    "ExistenceVerdict",
    "UniquenessReport",
    "SolverError",
    "construct_subsolution",
    "construct_supersolution",
    "solve_periodic_logistic",
    "existence_verdict",
    "uniqueness_probe",
    "discrete_residual",
    "sandwich",
]

log = logging.getLogger(__name__)

BLOWUP = 1e6
DECAYED = 1e-6


class SolverError(ArithmeticError):
    pass


def _reaction_bands(spec, mesh, lam):
    V = -lam * sample_levels(spec, mesh, "m") if lam else None
    return assemble_levels(spec, mesh, V)


def _state_levels(spec, mesh, which):
    return np.ascontiguousarray(sample_levels(spec, mesh, which)[:, mesh.state_slice])


def discrete_residual(spec, mesh: Mesh, lam, u_full):
    """Node-wise ``D_t u + (A - lambda m) u + a f(u) u`` at levels 1..nt on state nodes.

    ``u_full`` has shape ``(nt+1, nx+2)``; Dirichlet boundary values are
    treated as zero, as in the discrete problem on ``mesh``.
    """
    op = _reaction_bands(spec, mesh, lam)
    u = np.asarray(u_full, dtype=float)[:, mesh.state_slice]
    a = _state_levels(spec, mesh, "a")
    Au = op.matvec(u)
    res = (u[1:] - u[:-1]) / mesh.dt + Au[1:] + a[1:] * spec.nonlinearity.f(u[1:]) * u[1:]
    return res


@dataclass
class PeriodicSolution:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray  # (nt+1, nx+2), final period
    residual: float
    min_interior: float
    normal_derivative: np.ndarray  # (nt+1, 2) outward one-sided derivative at (lo, hi); nan at Robin ends
    iterations: int
    converged: bool
    status: str  # converged | blowup | stagnated | max-periods
    sup_history: list = field(default_factory=list)

    @property
    def sup(self):
        return float(np.max(np.abs(self.u)))

    @property
    def positive(self):
        nd = self.normal_derivative[~np.isnan(self.normal_derivative)]
        return self.min_interior > 0.0 and bool(np.all(nd < 0.0))


def _normal_derivatives(mesh, u):
    nd = np.full((u.shape[0], 2), np.nan)
    if not mesh.robin_lo:
        nd[:, 0] = -(u[:, 1] - u[:, 0]) / mesh.h
    if not mesh.robin_hi:
        nd[:, 1] = (u[:, -1] - u[:, -2]) / mesh.h
    return nd


def _initial_state(mesh, u0):
    if callable(u0):
        u0 = u0(mesh.x_full)
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim == 0:
        return np.full(mesh.n_state, float(u0))
    if u0.ndim == 2:
        u0 = u0[0]
    if u0.shape[-1] == mesh.nx + 2:
        u0 = u0[mesh.state_slice]
    if u0.shape != (mesh.n_state,):
        raise ValueError(f"initial data has shape {u0.shape}")
    return u0.copy()


def solve_periodic_logistic(
    spec,
    mesh: Mesh,
    lam: float,
    u0=1.0,
    tol: float = 1e-8,
    max_periods: int = 2000,
    blowup: float = BLOWUP,
    stagnation: int = 200,
    newton_tol: float = 1e-13,
) -> PeriodicSolution:
    """March whole periods until ``max |u(T) - u(0)| <= tol``.

    Gives up early when ``sup u`` exceeds ``blowup`` or when the period
    residual has not improved for ``stagnation`` periods.
    """
    state = _initial_state(mesh, u0)
    if np.any(state < 0):
        raise ValueError("initial data must be nonnegative")
    op = _reaction_bands(spec, mesh, lam)
    a = _state_levels(spec, mesh, "a")
    p = float(spec.nonlinearity.exponent)
    best = np.inf
    since_best = 0
    history = []
    status = "max-periods"
    traj = None
    residual = np.inf
    k = 0
    for k in range(1, max_periods + 1):
        traj, worst = _kernels.logistic_period(op.lower, op.diag, op.upper, a, p, mesh.dt, state, newton_tol, 50)
        if worst < 0:
            raise SolverError(f"Newton failed in period {k}")
        if np.min(traj) < -1e-12 * max(float(np.max(traj)), 1e-300):
            raise SolverError(f"positivity lost in period {k}; refine nt (dt * lambda * max m too large)")
        residual = float(np.max(np.abs(traj[-1] - traj[0])))
        sup = float(np.max(np.abs(traj)))
        history.append(sup)
        state = traj[-1].copy()
        if not np.isfinite(sup) or sup > blowup:
            status = "blowup"
            break
        if residual <= tol:
            status = "converged"
            break
        if residual < 0.999 * best:
            best, since_best = residual, 0
        else:
            since_best += 1
            if since_best >= stagnation:
                status = "stagnated"
                break
    full = mesh.to_full(traj)
    interior = full[:, 1:-1]
    return PeriodicSolution(
        x=mesh.x_full,
        t=mesh.times,
        u=full,
        residual=residual,
        min_interior=float(np.min(interior)),
        normal_derivative=_normal_derivatives(mesh, full),
        iterations=k,
        converged=status == "converged",
        status=status,
        sup_history=history,
    )


@dataclass
class Subsolution:
    epsilon: float
    field: np.ndarray  # (nt+1, nx+2)
    sigma_zero: float
    max_residual: float  # max of residual / (eps*phi) over checked nodes, < 0


def construct_subsolution(spec, mesh: Mesh, lam: float, floor: float = 1e-10) -> Subsolution:
    """``eps * phi`` with ``phi`` the principal eigenfunction at ``(lam, 0)``."""
    res = sigma_at(spec, mesh, lam, 0.0)
    if res.sigma >= 0:
        raise PreconditionError(f"subsolution needs Sigma(lambda, 0) < 0, got {res.sigma:.6g}")
    amax = float(np.max(sample_levels(spec, mesh, "a")))
    nl = spec.nonlinearity
    # phi is periodic only up to the power-iteration residual; close the loop exactly
    phi = res.eigenfunction.copy()
    phi[-1] = phi[0]
    u = phi[1:, mesh.state_slice]
    checked = u > floor
    margin = 1e-12 * (1.0 + abs(res.sigma))
    eps = 1.0
    bound = -res.sigma / amax if amax > 0 else np.inf
    for _ in range(60):
        if float(nl.f(eps)) < bound:
            r = discrete_residual(spec, mesh, lam, eps * phi)
            scaled = r[checked] / (eps * u[checked])
            worst = float(np.max(scaled)) if scaled.size else -np.inf
            if worst < -margin:
                break
        eps *= 0.5
    else:
        raise SolverError("no dyadic epsilon satisfies the discrete subsolution inequality")
    fld = eps * phi
    return Subsolution(eps, fld, res.sigma, worst)


@dataclass
class Supersolution:
    kappa: float
    field: np.ndarray  # (nt+1, nx+2) restricted to the base grid
    gamma: float
    sigma_n: float
    mu: float
    n: int | None
    min_residual: float


def construct_supersolution(spec, mesh: Mesh, lam: float, gamma: float, n: int | None = 8, max_doublings: int = 200) -> Supersolution:
    """``kappa * psi`` with ``psi`` the principal eigenfunction at ``(lam, gamma)`` on a dilated domain.

    When both ends are Robin, ``psi`` lives on the domain itself and ``n`` is ignored.
    """
    if spec.bc_lo.is_dirichlet or spec.bc_hi.is_dirichlet:
        dil = dilated_scenario(spec, n, cell=mesh.h)
        dmesh, k_lo = dilated_mesh(mesh, dil)
        res = sigma_at(dil.spec, dmesh, lam, gamma)
        psi = restrict(res.eigenfunction, k_lo, mesh)
    else:
        n = None
        res = sigma_at(spec, mesh, lam, gamma)
        psi = res.eigenfunction
    if res.sigma <= 0:
        raise PreconditionError(f"supersolution needs Sigma_n(lambda, gamma) > 0, got {res.sigma:.6g}; increase gamma")
    psi = psi.copy()
    psi[-1] = psi[0]
    mu = float(np.min(psi))
    if not mu > 0:
        raise SolverError("dilated eigenfunction is not positive on the closed domain")
    nl = spec.nonlinearity
    kappa = 1.0
    for _ in range(max_doublings):
        if float(nl.f(kappa * mu)) > gamma:
            r = discrete_residual(spec, mesh, lam, kappa * psi)
            worst = float(np.min(r))
            if worst > 0:
                return Supersolution(kappa, kappa * psi, gamma, res.sigma, mu, n, worst)
        kappa *= 2.0
    raise SolverError("no admissible kappa found")


@dataclass
class Sandwich:
    sub: Subsolution
    sup: Supersolution
    lower_gap: float  # min of u - eps*phi
    upper_gap: float  # min of kappa*psi - u

    def holds(self, slack=0.0):
        return self.lower_gap >= -slack and self.upper_gap >= -slack


def sandwich(spec, mesh: Mesh, lam: float, u_full, n: int = 8, gammas=DEFAULT_RAMP) -> Sandwich:
    """Compare a computed solution with ``eps*phi`` below and ``kappa*psi_n`` above.

    ``gamma`` is the first ramp value making the dilated principal eigenvalue positive.
    """
    sub = construct_subsolution(spec, mesh, lam)
    sup = None
    for g in gammas:
        try:
            sup = construct_supersolution(spec, mesh, lam, g, n)
            break
        except PreconditionError:
            continue
    if sup is None:
        raise PreconditionError("no gamma on the ramp makes the dilated eigenvalue positive")
    u = np.asarray(u_full, dtype=float)
    return Sandwich(sub, sup, float(np.min(u - sub.field)), float(np.min(sup.field - u)))


def _is_zero_state(sol: PeriodicSolution):
    return sol.sup <= DECAYED


def _observe(sol: PeriodicSolution):
    if sol.status in ("blowup", "stagnated"):
        return "not-exists-bounded"
    if _is_zero_state(sol):
        return "zero"
    if sol.converged and sol.positive:
        return "positive"
    return "unconverged"


@dataclass
class ExistenceVerdict:
    lam: float
    sigma_zero: float
    classification: object  # sigma.Classification, or None when min a > 0
    predicted: str  # exists | not-exists | inconclusive
    observed: str  # exists | not-exists | not-exists-bounded | inconclusive
    runs: list
    tol: float

    @property
    def plateau(self):
        c = self.classification
        return c.value if c is not None and c.kind == "finite" else None

    @property
    def agree(self):
        if self.predicted == "exists":
            return self.observed == "exists"
        if self.predicted == "not-exists":
            return self.observed in ("not-exists", "not-exists-bounded")
        return False

    def margins(self):
        """Distance of Sigma(lambda, 0) and of a finite plateau from zero."""
        return abs(self.sigma_zero), (abs(self.plateau) if self.plateau is not None else np.inf)


def existence_verdict(spec, mesh: Mesh, lam: float, tol: float = 1e-6, ramp=DEFAULT_RAMP, solver_tol: float = 1e-8, **solver_kw) -> ExistenceVerdict:
    sig0 = sigma_at(spec, mesh, lam, 0.0).sigma
    a = sample_levels(spec, mesh, "a")
    classification = None
    if np.min(a) > 0:
        predicted = "exists" if sig0 < -tol else ("not-exists" if sig0 > tol else "inconclusive")
    else:
        classification = classify_sigma_infinity(spec, mesh, lam, ramp)
        if abs(sig0) <= tol or classification.kind == "inconclusive":
            predicted = "inconclusive"
        elif sig0 > tol:
            predicted = "not-exists"
        elif classification.kind == "divergent" or classification.value > tol:
            predicted = "exists"
        elif classification.value < -tol:
            predicted = "not-exists"
        else:
            predicted = "inconclusive"
    starts = [("one", 1.0)]
    if sig0 < -tol:
        starts.insert(0, ("sub", construct_subsolution(spec, mesh, lam).field))
    runs = []
    for name, u0 in starts:
        sol = solve_periodic_logistic(spec, mesh, lam, u0, tol=solver_tol, **solver_kw)
        runs.append((name, _observe(sol), sol))
    kinds = {r[1] for r in runs}
    if kinds == {"positive"}:
        observed = "exists"
    elif kinds == {"zero"}:
        observed = "not-exists"
    elif kinds <= {"zero", "not-exists-bounded"}:
        observed = "not-exists-bounded"
    else:
        observed = "inconclusive"
    return ExistenceVerdict(lam, sig0, classification, predicted, observed, runs, tol)


@dataclass
class UniquenessReport:
    lam: float
    starts: list
    solutions: list
    max_distance: float
    tol: float
    conclusive: bool

    @property
    def unique(self):
        return self.conclusive and self.max_distance <= 10 * self.tol


def uniqueness_probe(spec, mesh: Mesh, lam: float, tol: float = 1e-8, **solver_kw) -> UniquenessReport:
    """Solve from several initial data and compare the periodic states reached."""
    m = sample_levels(spec, mesh, "m")
    a = sample_levels(spec, mesh, "a")
    scale = max(1.0, abs(lam) * float(np.max(np.abs(m))) / max(float(np.max(a)), 1e-300))
    sub = construct_subsolution(spec, mesh, lam)
    starts = [("0.01", 0.01), ("scale", scale), ("10*scale", 10 * scale), ("eps*phi", sub.field)]
    sols = [solve_periodic_logistic(spec, mesh, lam, u0, tol=0.1 * tol, **solver_kw) for _, u0 in starts]
    conclusive = all(s.converged for s in sols)
    dist = 0.0
    for i in range(len(sols)):
        for j in range(i):
            dist = max(dist, float(np.max(np.abs(sols[i].u - sols[j].u))))
    return UniquenessReport(lam, [s[0] for s in starts], sols, dist, tol, conclusive)
