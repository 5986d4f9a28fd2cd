"""Space-time mesh and the tridiagonal spatial operator.

The spatial operator at time ``t`` is

    -d u'' + b u' + (c + V) u

discretised with second-order central differences.  Dirichlet endpoints are
eliminated; a Robin endpoint keeps its boundary node as an unknown and closes
the row with a ghost node, ``u_ghost = u_inner - 2 h beta u_boundary``.  Rows
whose cell Peclet number ``|b| h / (2 d)`` reaches 1 fall back to first-order
upwinding so the matrix keeps nonpositive off-diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ScenarioSpec

__all__ = ["Mesh", "BandedOperator", "build_mesh", "assemble_operator", "assemble_levels", "sample_levels"]


@dataclass(frozen=True)
class Mesh:
    x_lo: float
    x_hi: float
    nx: int
    nt: int
    period: float
    robin_lo: bool = False
    robin_hi: bool = False

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError(f"nx must be >= 3, got {self.nx}")
        if self.nt < 4:
            raise ValueError(f"nt must be >= 4, got {self.nt}")
        if not self.x_hi > self.x_lo or not self.period > 0:
            raise ValueError("degenerate mesh")

    @property
    def h(self):
        return (self.x_hi - self.x_lo) / (self.nx + 1)

    @property
    def dt(self):
        return self.period / self.nt

    @property
    def x_full(self):
        """All nx+2 grid points including both endpoints."""
        return self.x_lo + self.h * np.arange(self.nx + 2)

    @property
    def nodes(self):
        """Interior nodes x_k, k = 1..nx."""
        return self.x_full[1:-1]

    @property
    def times(self):
        return self.dt * np.arange(self.nt + 1)

    @property
    def state_slice(self):
        return slice(0 if self.robin_lo else 1, self.nx + 2 if self.robin_hi else self.nx + 1)

    @property
    def n_state(self):
        return self.nx + int(self.robin_lo) + int(self.robin_hi)

    @property
    def x_state(self):
        return self.x_full[self.state_slice]

    def to_full(self, u):
        """Embed state values (last axis) into full-grid arrays; Dirichlet ends are 0."""
        u = np.asarray(u)
        out = np.zeros(u.shape[:-1] + (self.nx + 2,), dtype=float)
        out[..., self.state_slice] = u
        return out


def build_mesh(spec: ScenarioSpec, nx: int | None = None, nt: int | None = None) -> Mesh:
    dnx, dnt = spec.default_resolution
    return Mesh(
        spec.x_lo,
        spec.x_hi,
        int(nx if nx is not None else dnx),
        int(nt if nt is not None else dnt),
        spec.period,
        robin_lo=not spec.bc_lo.is_dirichlet,
        robin_hi=not spec.bc_hi.is_dirichlet,
    )


@dataclass
class BandedOperator:
    """Tridiagonal operator on the state nodes (one time level, or stacked levels)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    upwind_rows: list = field(default_factory=list)

    def matvec(self, u):
        out = self.diag * u
        out[..., 1:] += self.lower[..., 1:] * u[..., :-1]
        out[..., :-1] += self.upper[..., :-1] * u[..., 1:]
        return out

    def dense(self):
        if self.diag.ndim != 1:
            raise ValueError("dense() needs a single time level")
        n = self.diag.size
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return A


def sample_levels(spec: ScenarioSpec, mesh: Mesh, which: str, times=None):
    """Field samples on the full grid, shape ``(len(times), nx+2)``."""
    t = mesh.times if times is None else np.atleast_1d(np.asarray(times, dtype=float))
    X, Tt = np.meshgrid(mesh.x_full, t)
    return np.asarray(spec.sample(which, X, Tt), dtype=float)


def _assemble(spec, mesh, d, b, c):
    """Rows for full-grid coefficient arrays ``(L, nx+2)``; returns state-node bands."""
    h = mesh.h
    nfull = mesh.nx + 2
    lower = np.zeros_like(d)
    diag = np.zeros_like(d)
    upper = np.zeros_like(d)
    dh2 = d / h**2
    peclet = np.abs(b) * h / (2.0 * d)
    upwind = peclet >= 1.0
    central = ~upwind
    lower[central] = -dh2[central] - b[central] / (2 * h)
    upper[central] = -dh2[central] + b[central] / (2 * h)
    diag[central] = 2 * dh2[central] + c[central]
    pos = upwind & (b > 0)
    neg = upwind & (b <= 0)
    lower[pos] = -dh2[pos] - b[pos] / h
    upper[pos] = -dh2[pos]
    diag[pos] = 2 * dh2[pos] + b[pos] / h + c[pos]
    lower[neg] = -dh2[neg]
    upper[neg] = -dh2[neg] + b[neg] / h
    diag[neg] = 2 * dh2[neg] - b[neg] / h + c[neg]
    if mesh.robin_lo:
        beta = spec.bc_lo.beta
        diag[:, 0] = 2 * dh2[:, 0] * (1 + h * beta) + b[:, 0] * beta + c[:, 0]
        upper[:, 0] = -2 * dh2[:, 0]
        lower[:, 0] = 0.0
    if mesh.robin_hi:
        beta = spec.bc_hi.beta
        k = nfull - 1
        diag[:, k] = 2 * dh2[:, k] * (1 + h * beta) - b[:, k] * beta + c[:, k]
        lower[:, k] = -2 * dh2[:, k]
        upper[:, k] = 0.0
    sl = mesh.state_slice
    lower, diag, upper = lower[:, sl].copy(), diag[:, sl].copy(), upper[:, sl].copy()
    lower[:, 0] = 0.0
    upper[:, -1] = 0.0
    up = upwind.copy()
    if mesh.robin_lo:
        up[:, 0] = False
    if mesh.robin_hi:
        up[:, -1] = False
    rows = sorted(set(np.nonzero(up[:, sl])[1].tolist()))
    return lower, diag, upper, rows


def _potential_levels(extra_potential, shape):
    if extra_potential is None:
        return np.zeros(shape)
    V = np.asarray(extra_potential, dtype=float)
    return np.broadcast_to(V, shape)


def assemble_levels(spec: ScenarioSpec, mesh: Mesh, extra_potential=None, times=None) -> BandedOperator:
    """Operator bands at every requested time level, each of shape ``(L, n_state)``.

    ``extra_potential`` is sampled on the full grid: a scalar, an ``(nx+2,)``
    vector or an ``(L, nx+2)`` array.
    """
    d = sample_levels(spec, mesh, "diffusion", times)
    b = sample_levels(spec, mesh, "drift", times)
    c = sample_levels(spec, mesh, "potential", times) + _potential_levels(extra_potential, d.shape)
    lower, diag, upper, rows = _assemble(spec, mesh, d, b, c)
    return BandedOperator(lower, diag, upper, rows)


def assemble_operator(spec: ScenarioSpec, mesh: Mesh, t: float, extra_potential=None) -> BandedOperator:
    """Operator at a single time ``t``; ``extra_potential`` is node-sampled (full grid)."""
    if extra_potential is not None:
        extra_potential = np.asarray(extra_potential, dtype=float)[None, ...]
    op = assemble_levels(spec, mesh, extra_potential, times=[t])
    return BandedOperator(op.lower[0], op.diag[0], op.upper[0], op.upwind_rows)
