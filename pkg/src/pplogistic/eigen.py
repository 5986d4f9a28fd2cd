"""Principal eigenpair of the periodic-parabolic operator.

The fully discrete eigenproblem is

    (u_j - u_{j-1}) / dt + A_j u_j = sigma u_j,   u_0 = u_nt,

i.e. ``sigma`` is the shift ``s`` at which the shifted period map
``M(s) = prod_j (I + dt (A_j - s))^{-1}`` has spectral radius 1.  A constant
potential therefore moves ``sigma`` by exactly that constant.  The solver
alternates power iteration on ``M(s)`` with the update
``s <- s - log(rho(s)) / T``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .discretization import Mesh
from .propagator import MonodromyOperator

log = logging.getLogger(__name__)

__all__ = [
    "EigenResult",
    "EigenError",
    "ConvergenceError",
    "PositivityLostError",
    "PerronStructureError",
    "principal_eigenpair",
    "dense_oracle",
    "richardson_eigenpair",
]


class EigenError(ArithmeticError):
    pass


class ConvergenceError(EigenError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class PositivityLostError(EigenError):
    pass


class PerronStructureError(EigenError):
    pass


@dataclass
class EigenResult:
    sigma: float
    rho: float
    eigenfunction: np.ndarray  # (nt+1, nx+2), sup-norm 1
    x: np.ndarray
    t: np.ndarray
    iterations: int
    residual: float
    period: float
    gap_ratio: float = float("nan")
    warnings: list = field(default_factory=list)

    def sup_over(self, mask):
        return float(np.max(self.eigenfunction[mask])) if np.any(mask) else 0.0


def _check_sign(v, where):
    vmax = np.max(np.abs(v))
    if not np.all(np.isfinite(v)) or vmax == 0.0:
        raise PositivityLostError(f"degenerate iterate ({where})")
    if np.min(v) < -1e-12 * vmax:
        raise PositivityLostError(f"positivity lost: negative entries in the iterate ({where})")


def _rho(sigma, period):
    # exp(-sigma T) leaves the float range for strongly negative sigma; sigma itself stays valid
    try:
        return math.exp(-sigma * period)
    except OverflowError:
        log.warning(f"rho = exp(-sigma T) overflows at sigma = {sigma:.6g}")
        return math.inf


def _finish(op: MonodromyOperator, sigma, v, iterations, residual, gap=float("nan")):
    mesh = op.mesh
    traj = op.trajectory(v)
    full = mesh.to_full(traj)
    full /= np.max(np.abs(full))
    warnings = list(op.warnings)
    if not op.positive:
        warnings.append("step matrices are not certified M-matrices")
        log.warning(warnings[-1])
    return EigenResult(
        sigma=float(sigma),
        rho=_rho(sigma, mesh.period),
        eigenfunction=full,
        x=mesh.x_full,
        t=mesh.times,
        iterations=iterations,
        residual=residual,
        period=mesh.period,
        gap_ratio=gap,
        warnings=warnings,
    )


def _power(op, v, tol, max_iter):
    v = v / np.max(np.abs(v))
    prev = None
    for k in range(1, max_iter + 1):
        w = op.apply(v)
        _check_sign(w, f"shift {op.shift:.6g}, iteration {k}")
        rho = np.max(np.abs(w))
        v = w / rho
        if prev is not None and abs(rho - prev) <= tol * rho:
            return v, k, True
        prev = rho
    return v, max_iter, False


def principal_eigenpair(
    M_op: MonodromyOperator,
    tol: float = 1e-10,
    max_iter: int = 20000,
    v0=None,
    max_shifts: int = 200,
) -> EigenResult:
    """Perron pair of the discrete periodic problem, by shifted power iteration."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = M_op.mesh.period
    op = M_op
    v = np.ones(op.n) if v0 is None else np.asarray(v0, dtype=float).copy()
    total = 0
    residual = float("nan")
    stol = max(tol * 1e-2, 1e-14)
    # log rho(s) increases with s.  The unit-slope update s - log(rho)/T is
    # exact for autonomous problems; when it stalls or leaves the bracket
    # (lo: log rho < 0, hi: > 0 or step matrices no longer positive) fall
    # back to Illinois regula falsi, or bisection.  Before a bracket exists
    # a secant through the last two points is used when it reaches further:
    # log rho is convex in s, so that secant overshoots the root.
    lo = hi = f_lo = f_hi = None
    prev = None
    side = 0
    last_f = math.inf
    s = op.shift
    for _ in range(max_shifts):
        if op.min_pivot <= 0.0:
            hi, f_hi, side = s, None, 1
            s_new = None
        else:
            v, its, ok = _power(op, v, tol, max_iter - total)
            total += its
            w = op.apply(v)
            rho = float(np.max(np.abs(w)))
            residual = float(np.max(np.abs(w - rho * v)) / np.max(np.abs(v)))
            if not ok:
                raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", residual)
            f = math.log(rho)
            sigma = s - f / T
            if abs(f / T) <= stol * (1.0 + abs(sigma)):
                return _finish(op, sigma, w / rho, total, residual)
            if f < 0:
                if side == -1 and f_hi is not None:
                    f_hi *= 0.5
                lo, f_lo, side = s, f, -1
            else:
                if side == 1 and f_lo is not None:
                    f_lo *= 0.5
                hi, f_hi, side = s, f, 1
            if lo is not None and hi is not None and hi - lo <= 2.0 * stol * (1.0 + abs(sigma)):
                # log rho is at its rounding floor; the bracket pins sigma
                return _finish(op, sigma, w / rho, total, residual)
            s_new = sigma if abs(f) < 0.5 * last_f else None
            last_f = abs(f)
            if (lo is None or hi is None) and prev is not None:
                if prev[1] != f and (prev[1] < 0) == (f < 0):
                    secant = s - f * (s - prev[0]) / (f - prev[1])
                    if (secant - sigma) * -f > 0:
                        s_new = secant
            prev = (s, f)
        if lo is not None and hi is not None:
            if s_new is None or not lo < s_new < hi:
                s_new = 0.5 * (lo + hi)
                if f_hi is not None:
                    s_new = lo - f_lo * (hi - lo) / (f_hi - f_lo)
                if not lo < s_new < hi:
                    s_new = 0.5 * (lo + hi)
        elif s_new is None or (hi is not None and s_new >= hi):
            # one-sided: step further out
            s_new = (hi - (1.0 + abs(hi))) if hi is not None else sigma
        s = s_new
        op = op.with_shift(s)
    raise ConvergenceError(f"shift update did not settle in {max_shifts} rounds", residual)


def _spectrum(op):
    M = op.dense_matrix()
    ev, vec = np.linalg.eig(M)
    order = np.argsort(-np.abs(ev))
    return ev[order], vec[:, order]


def dense_oracle(M_op: MonodromyOperator, gap_tol: float = 1e-8, max_n: int = 66) -> EigenResult:
    """Brute force: dense period matrices, full spectra, and a bracketed root in the shift."""
    if M_op.n > max_n:
        raise ValueError(f"dense oracle limited to {max_n} unknowns, got {M_op.n}")
    T = M_op.mesh.period

    def log_rho(s):
        ev, _ = _spectrum(M_op.with_shift(s))
        return math.log(abs(ev[0]))

    guess = M_op.shift - log_rho(M_op.shift) / T
    width = 1e-3 * (1.0 + abs(guess))
    lo, hi = guess - width, guess + width
    for _ in range(200):
        flo, fhi = log_rho(lo), log_rho(hi)
        if flo < 0.0 < fhi:
            break
        if flo >= 0.0:
            lo -= width
        if fhi <= 0.0:
            hi += width
        width *= 2.0
    else:
        raise PerronStructureError("could not bracket the principal eigenvalue")
    sigma = brentq(log_rho, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    op = M_op.with_shift(sigma)
    ev, vec = _spectrum(op)
    lead = ev[0]
    rho = abs(lead)
    if abs(lead.imag) > gap_tol * rho or lead.real <= 0:
        raise PerronStructureError(f"dominant eigenvalue {lead} is not real positive")
    gap = abs(ev[1]) / rho if ev.size > 1 else 0.0
    if gap > 1.0 - gap_tol:
        raise PerronStructureError(f"dominant eigenvalue not simple (|mu2|/rho = {gap})")
    v = np.real(vec[:, 0])
    v = v / v[np.argmax(np.abs(v))]
    _check_sign(v, "dense eigenvector")
    residual = float(np.max(np.abs(op.apply(v) - rho * v)) / np.max(np.abs(v)))
    return _finish(op, sigma, v, 0, residual, gap=gap)


def richardson_eigenpair(spec, mesh: Mesh, lam=0.0, gamma=0.0, potential=None, scheme="implicit-euler", **kw) -> EigenResult:
    """Extrapolate sigma in dt from runs with nt and 2 nt steps (first-order scheme)."""
    coarse = principal_eigenpair(MonodromyOperator(spec, mesh, lam, gamma, potential, scheme), **kw)
    fine_mesh = Mesh(mesh.x_lo, mesh.x_hi, mesh.nx, 2 * mesh.nt, mesh.period, mesh.robin_lo, mesh.robin_hi)
    fine_op = MonodromyOperator(spec, fine_mesh, lam, gamma, potential, scheme, shift=coarse.sigma)
    fine = principal_eigenpair(fine_op, **kw)
    order = 2.0 if scheme == "crank-nicolson" else 1.0
    factor = 2.0**order
    sigma = (factor * fine.sigma - coarse.sigma) / (factor - 1.0)
    fine.sigma = sigma
    fine.rho = _rho(sigma, mesh.period)
    fine.iterations += coarse.iterations
    return fine
