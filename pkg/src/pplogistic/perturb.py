"""Dilated domains: Dirichlet endpoints pushed outward by ``1/n``.

Coefficients are closed-form expressions, so the dilated problem simply
evaluates them on the larger interval.  Meshes of the dilated problems keep
the spacing of the base mesh, and the base nodes stay grid nodes, so
eigenvalues on the two domains differ only by the domain change.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .discretization import Mesh, build_mesh
from .scenario import ScenarioError, ScenarioSpec
from .sigma import sigma_at

__all__ = ["DilatedScenario", "DilationError", "dilated_scenario", "dilated_mesh", "SigmaSequence", "sigma_sequence"]


class DilationError(ScenarioError):
    pass


@dataclass(frozen=True)
class DilatedScenario:
    n: int
    spec: ScenarioSpec
    original: ScenarioSpec

    @property
    def offset_lo(self):
        return self.original.x_lo - self.spec.x_lo

    @property
    def offset_hi(self):
        return self.spec.x_hi - self.original.x_hi


def dilated_scenario(spec: ScenarioSpec, n: int, cell: float | None = None) -> DilatedScenario:
    """Move each Dirichlet endpoint outward by ``1/n``.

    With ``cell`` the offset is rounded to a whole number of cells (at least
    one), so that a mesh of that spacing can hold both domains.
    """
    lo_d, hi_d = spec.bc_lo.is_dirichlet, spec.bc_hi.is_dirichlet
    if not (lo_d or hi_d):
        raise DilationError("dilation moves Dirichlet endpoints; both ends are Robin")
    n_min = math.ceil(2.0 / spec.length)
    if n < n_min:
        raise DilationError(f"n must be >= {n_min} for this interval, got {n}")
    delta = 1.0 / n
    if cell is not None:
        delta = max(1, round(delta / cell)) * cell
    grown = spec.replace(
        x_lo=spec.x_lo - delta if lo_d else spec.x_lo,
        x_hi=spec.x_hi + delta if hi_d else spec.x_hi,
    )
    return DilatedScenario(int(n), grown, spec)


def _cells(length, h):
    k = round(length / h)
    if abs(k * h - length) > 1e-9 * max(length, 1.0):
        raise DilationError(f"offset {length} is not a whole number of cells of width {h}")
    return int(k)


def dilated_mesh(base: Mesh, dil: DilatedScenario) -> tuple[Mesh, int]:
    """Mesh for the dilated problem with the base spacing, and the index of ``x_lo`` in it."""
    h = base.h
    k_lo = _cells(dil.offset_lo, h)
    k_hi = _cells(dil.offset_hi, h)
    mesh = Mesh(dil.spec.x_lo, dil.spec.x_hi, base.nx + k_lo + k_hi, base.nt, base.period, base.robin_lo, base.robin_hi)
    return mesh, k_lo


def restrict(field, k_lo, base: Mesh):
    """Dilated full-grid samples restricted to the base full grid."""
    return np.asarray(field)[..., k_lo : k_lo + base.nx + 2]


@dataclass
class SigmaSequence:
    n_list: tuple
    sigmas: tuple
    sigma: float
    h: float

    def strictly_increasing(self):
        return all(b > a for a, b in zip(self.sigmas, self.sigmas[1:]))

    def all_below(self):
        return all(s < self.sigma for s in self.sigmas)


def sigma_sequence(spec: ScenarioSpec, lam: float, gamma: float, n_list, mesh: Mesh | None = None, threads: int = 1, **kw) -> SigmaSequence:
    n_list = tuple(int(n) for n in n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    base = mesh if mesh is not None else build_mesh(spec)

    def one(n):
        dil = dilated_scenario(spec, n, cell=base.h)
        dmesh, _ = dilated_mesh(base, dil)
        return sigma_at(dil.spec, dmesh, lam, gamma, **kw).sigma

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sigmas = list(pool.map(one, n_list))
    else:
        sigmas = [one(n) for n in n_list]
    sigma = sigma_at(spec, base, lam, gamma, **kw).sigma
    return SigmaSequence(n_list, tuple(sigmas), sigma, base.h)
