"""One-period solution map of the linear periodic-parabolic flow.

The linear problem is ``u_t + L(t) u + V u = 0`` on the state nodes.  Time
stepping is implicit Euler by default,

    (I + dt (A_j - s)) u_j = u_{j-1},

or Crank-Nicolson.  The spectral shift ``s`` is what lets the eigen solver
pose the fully discrete periodic eigenproblem ``(u_j - u_{j-1})/dt + A_j u_j
= sigma u_j`` as a fixed point of the period map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, gmres

from . import _kernels
from .discretization import Mesh, assemble_levels, sample_levels
from .scenario import ScenarioSpec

__all__ = [
    "MonodromyOperator",
    "PeriodicLinearSolution",
    "StepError",
    "SigmaNearZeroError",
    "step",
    "apply_monodromy",
    "periodic_solve",
]

log = logging.getLogger(__name__)

SCHEMES = {"implicit-euler": 1.0, "crank-nicolson": 0.5}


class StepError(ArithmeticError):
    """A step matrix is singular."""


class SigmaNearZeroError(ArithmeticError):
    """``I - M`` is numerically singular: the principal eigenvalue is close to 0."""


def potential_levels(spec, mesh, lam=0.0, gamma=0.0, potential=None):
    """Full-grid samples ``(nt+1, nx+2)`` of ``-lam*m + gamma*a (+ potential)``."""
    V = np.zeros((mesh.nt + 1, mesh.nx + 2))
    if lam:
        V -= lam * sample_levels(spec, mesh, "m")
    if gamma:
        V += gamma * sample_levels(spec, mesh, "a")
    if potential is not None:
        V = V + np.broadcast_to(np.asarray(potential, dtype=float), V.shape)
    return V


class MonodromyOperator:
    """Matrix-free period map for ``d/dt + L + V - shift`` on one mesh.

    Step matrices are factorised once at construction; ``apply`` and
    ``trajectory`` may be called concurrently.
    """

    def __init__(
        self,
        spec: ScenarioSpec,
        mesh: Mesh,
        lam: float = 0.0,
        gamma: float = 0.0,
        potential=None,
        scheme: str = "implicit-euler",
        shift: float = 0.0,
        _bands=None,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.spec = spec
        self.mesh = mesh
        self.lam = float(lam)
        self.gamma = float(gamma)
        self.potential = potential
        self.scheme = scheme
        self.theta = SCHEMES[scheme]
        self.shift = float(shift)
        fresh = _bands is None
        if fresh:
            V = potential_levels(spec, mesh, lam, gamma, potential)
            op = assemble_levels(spec, mesh, V)
            _bands = (op.lower, op.diag, op.upper, op.upwind_rows)
        self.lower, self.diag, self.upper, self.upwind_rows = _bands
        self._cp, self._ip, self._lo, self.min_pivot = _kernels.factor_levels(
            self.lower, self.diag, self.upper, mesh.dt, self.theta, self.shift
        )
        if self.min_pivot == 0.0:
            raise StepError("singular step matrix")
        self.warnings = []
        if self.upwind_rows:
            self.warnings.append(f"upwind downgrade on rows {self.upwind_rows}")
        if scheme == "crank-nicolson":
            self.warnings.append("crank-nicolson may not preserve positivity for large dt*|A|")
        if fresh:
            for w in self.warnings:
                log.warning(w)

    def with_shift(self, shift: float) -> "MonodromyOperator":
        return MonodromyOperator(
            self.spec,
            self.mesh,
            self.lam,
            self.gamma,
            self.potential,
            self.scheme,
            shift,
            _bands=(self.lower, self.diag, self.upper, self.upwind_rows),
        )

    @property
    def n(self):
        return self.diag.shape[1]

    @property
    def positive(self) -> bool:
        """Certified M-matrix steps (and a nonnegative explicit half for CN)."""
        if self.min_pivot <= 0.0:
            return False
        if np.any(self.lower[:, 1:] > 0) or np.any(self.upper[:, :-1] > 0):
            return False
        if self.theta < 1.0:
            coef = (1.0 - self.theta) * self.mesh.dt
            if np.any(1.0 - coef * (self.diag - self.shift) < 0):
                return False
        return True

    def _run(self, v, forcing=None, record=False):
        v = np.asarray(v, dtype=float)
        single = v.ndim == 1
        block = np.ascontiguousarray(v[:, None] if single else v)
        if block.shape[0] != self.n:
            raise ValueError(f"expected {self.n} state entries, got {block.shape[0]}")
        f = np.zeros((0, self.n)) if forcing is None else np.ascontiguousarray(forcing, dtype=float)
        out, traj = _kernels.propagate(
            self._cp, self._ip, self._lo, self.lower, self.diag, self.upper,
            self.mesh.dt, self.theta, self.shift, block, f, record,
        )
        if single:
            return out[:, 0], traj[:, :, 0]
        return out, traj

    def apply(self, v):
        return self._run(v)[0]

    def trajectory(self, v0, forcing=None):
        """State samples ``(nt+1, n)`` of one period started from ``v0``."""
        return self._run(v0, forcing=forcing, record=True)[1]

    def dense_matrix(self):
        return self.apply(np.eye(self.n))

    def step_matrix_bands(self, j):
        s = self.theta * self.mesh.dt
        ab = np.zeros((3, self.n))
        ab[0, 1:] = s * self.upper[j, :-1]
        ab[1] = 1.0 + s * (self.diag[j] - self.shift)
        ab[2, :-1] = s * self.lower[j, 1:]
        return ab


def _level_index(mesh, t):
    j = int(round(t / mesh.dt))
    if abs(j * mesh.dt - t) > 1e-9 * max(1.0, mesh.period):
        raise ValueError(f"t={t} is not a time level of the mesh")
    return j % mesh.nt


def step(state, t: float, dt: float, M_op: MonodromyOperator):
    """Advance ``state`` from ``t`` to ``t + dt`` (``dt`` must equal the mesh step)."""
    mesh = M_op.mesh
    if abs(dt - mesh.dt) > 1e-12 * mesh.dt:
        raise ValueError("dt must equal mesh.dt")
    j0 = _level_index(mesh, t)
    j1 = j0 + 1
    rhs = np.array(state, dtype=float)
    if M_op.theta < 1.0:
        coef = (1.0 - M_op.theta) * dt
        Av = (M_op.diag[j0] - M_op.shift) * rhs
        Av[1:] += M_op.lower[j0, 1:] * rhs[:-1]
        Av[:-1] += M_op.upper[j0, :-1] * rhs[1:]
        rhs = rhs - coef * Av
    try:
        return solve_banded((1, 1), M_op.step_matrix_bands(j1), rhs)
    except np.linalg.LinAlgError as exc:
        raise StepError(f"singular step matrix at t={t + dt}") from exc


def apply_monodromy(M_op: MonodromyOperator, v0):
    return M_op.apply(v0)


@dataclass
class PeriodicLinearSolution:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    residual: float
    min_interior: float


def _forcing_levels(M_op, h):
    mesh = M_op.mesh
    if callable(h):
        X, Tt = np.meshgrid(mesh.x_full, mesh.times)
        h = np.asarray(h(X, Tt), dtype=float)
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        return np.full((mesh.nt + 1, M_op.n), float(h))
    if h.shape[-1] == mesh.nx + 2:
        h = h[..., mesh.state_slice]
    return np.ascontiguousarray(np.broadcast_to(h, (mesh.nt + 1, M_op.n)))


def periodic_solve(M_op: MonodromyOperator, h, dense_limit: int = 64, rtol: float = 1e-13) -> PeriodicLinearSolution:
    """Solve the periodic problem ``u_t + (L + V) u = h`` with ``u(0) = u(T)``.

    ``h`` is a scalar, a callable ``h(x, t)`` or samples on the time levels.
    """
    mesh = M_op.mesh
    F = _forcing_levels(M_op, h)
    g = M_op._run(np.zeros(M_op.n), forcing=F)[0]
    if M_op.n <= dense_limit:
        K = np.eye(M_op.n) - M_op.dense_matrix()
        if np.linalg.cond(K) > 1e12:
            raise SigmaNearZeroError("I - M is numerically singular (sigma near zero)")
        u0 = np.linalg.solve(K, g)
    else:
        op = LinearOperator((M_op.n, M_op.n), matvec=lambda v: v - M_op.apply(v), dtype=float)
        scale = max(np.max(np.abs(g)), 1e-300)
        u0, info = gmres(op, g / scale, rtol=rtol, atol=0.0, restart=min(M_op.n, 200), maxiter=50)
        u0 = u0 * scale
        if info != 0 or not np.all(np.isfinite(u0)):
            raise SigmaNearZeroError(f"periodic solve did not converge (info={info}); sigma near zero?")
    traj = M_op.trajectory(u0, forcing=F)
    residual = float(np.max(np.abs(traj[-1] - traj[0])))
    full = mesh.to_full(traj)
    return PeriodicLinearSolution(mesh.x_full, mesh.times, full, residual, float(np.min(traj)))
