"""Space-time structure of the refuge ``a = 0``.

The discrete interior of ``a^{-1}(0)`` at time level ``j`` is the set of
nodes where ``a`` vanishes together with both neighbours (one-cell erosion
in x).  Maximal runs of such nodes are the components of layer ``j``;
components in consecutive layers are linked when they share a node, and
layer ``nt - 1`` links back to layer 0.  A periodic path through the refuge
exists exactly when some layer-0 component can reach itself around the loop.

The module also builds two-lobe refuges and the bump families that sever
the corridor between the lobes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discretization import Mesh, sample_levels
from .expr import Expr
from .scenario import BumpComponent, ScenarioError, WeightSpec

__all__ = [
    "ZeroSetGraph",
    "PathCertificate",
    "Lobe",
    "TwoLobeGeometry",
    "BlockedWeightError",
    "build_zero_set_graph",
    "tau_path_exists",
    "make_blocked_weight",
    "write_zero_set_raster",
]


def _runs(row):
    """Maximal runs of True as inclusive (start, stop) index pairs."""
    idx = np.flatnonzero(row)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    stops = np.concatenate((idx[breaks], [idx[-1]]))
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


def _overlap(p, q):
    return max(p[0], q[0]) <= min(p[1], q[1])


@dataclass
class ZeroSetGraph:
    mask: np.ndarray  # (nt, nx+2) eroded interior
    layers: list  # per layer: sorted list of (k_start, k_stop)
    edges: list  # edges[j]: (c, c') from layer j to layer (j+1) % nt
    eps_zero: float
    x: np.ndarray
    t: np.ndarray

    @property
    def nt(self):
        return len(self.layers)

    def empty_layers(self):
        return [j for j, comps in enumerate(self.layers) if not comps]

    def successors(self, j, c):
        return [d for (a, d) in self.edges[j] if a == c]


def build_zero_set_graph(spec, mesh: Mesh, eps_zero: float | None = None) -> ZeroSetGraph:
    a = sample_levels(spec, mesh, "a")[: mesh.nt]
    if eps_zero is None:
        eps_zero = 1e-12 * float(np.max(np.abs(a)))
    zero = a <= eps_zero
    mask = np.zeros_like(zero)
    mask[:, 1:-1] = zero[:, :-2] & zero[:, 1:-1] & zero[:, 2:]
    layers = [_runs(row) for row in mask]
    nt = mesh.nt
    edges = []
    for j in range(nt):
        nxt = layers[(j + 1) % nt]
        edges.append([(c, d) for c, p in enumerate(layers[j]) for d, q in enumerate(nxt) if _overlap(p, q)])
    return ZeroSetGraph(mask, layers, edges, float(eps_zero), mesh.x_full, mesh.times[:nt])


@dataclass
class PathCertificate:
    exists: bool
    witness: list | None = None  # component index per layer 0..nt-1 (closing back to witness[0])
    cut: list = field(default_factory=list)
    wrap_failed: bool = False
    margin_cells: int | None = None

    @property
    def verdict(self):
        return "path_exists" if self.exists else "no_path"

    def describe(self):
        if self.exists:
            return f"path_exists (margin {self.margin_cells} cells)"
        if self.wrap_failed:
            return "no_path (reachable set never closes periodically)"
        return f"no_path (cut at layers {self.cut})"


def _walk_from(graph: ZeroSetGraph, start):
    """Forward reachability from one layer-0 component; returns back-pointers."""
    nt = graph.nt
    reach = {start}
    back = []
    for j in range(nt):
        pred = {}
        for c, d in graph.edges[j]:
            if c in reach and d not in pred:
                pred[d] = c
        back.append(pred)
        reach = set(pred)
        if not reach:
            break
    return reach, back


def tau_path_exists(graph: ZeroSetGraph) -> PathCertificate:
    nt = graph.nt
    for start in range(len(graph.layers[0])):
        reach, back = _walk_from(graph, start)
        if len(back) == nt and start in reach:
            witness = [start]
            c = start
            for j in range(nt - 1, 0, -1):
                c = back[j][c]
                witness.append(c)
            witness.reverse()
            margin = min(
                min(graph.layers[j][witness[j]][1], graph.layers[(j + 1) % nt][witness[(j + 1) % nt]][1])
                - max(graph.layers[j][witness[j]][0], graph.layers[(j + 1) % nt][witness[(j + 1) % nt]][0])
                + 1
                for j in range(nt)
            )
            return PathCertificate(True, witness=witness, margin_cells=int(margin))
    # joint reachability from every layer-0 component, to locate the cut
    reach = set(range(len(graph.layers[0])))
    first_dead = 0 if not reach else None
    for j in range(nt - 1):
        reach = {d for c, d in graph.edges[j] if c in reach}
        if not reach:
            first_dead = j + 1
            break
    cut = set(graph.empty_layers())
    if first_dead is not None:
        cut.add(first_dead)
    return PathCertificate(False, cut=sorted(cut), wrap_failed=first_dead is None)


def write_zero_set_raster(graph: ZeroSetGraph, path) -> Path:
    """0/1 grid of the discrete interior, one row per time level."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{x:.17g}" for x in graph.x])
        for t, row in zip(graph.t, graph.mask):
            w.writerow([f"{t:.17g}"] + [str(int(v)) for v in row])
    return path


class BlockedWeightError(ScenarioError):
    pass


def _r(v):
    # keeps generated scenario files free of binary noise such as 0.22499999999999998
    return round(float(v), 12)


@dataclass(frozen=True)
class Lobe:
    """Closed rectangle ``[x0, x1] x [t0, t1]`` of the refuge; time wraps modulo the period."""

    x0: float
    x1: float
    t0: float
    t1: float

    def distance_expr(self, period):
        xc, hx = _r(0.5 * (self.x0 + self.x1)), _r(0.5 * (self.x1 - self.x0))
        tc, ht = _r((0.5 * (self.t0 + self.t1)) % period), _r(0.5 * (self.t1 - self.t0))
        dt = f"abs(t - {tc!r})"
        return (
            f"max(max(0, abs(x - {xc!r}) - {hx!r}), "
            f"max(0, min({dt}, {period!r} - {dt}) - {ht!r}))"
        )


@dataclass(frozen=True)
class TwoLobeGeometry:
    """Left lobe (earlier) and right lobe (later) whose x-ranges overlap in a corridor.

    While both lobes are present, between ``t_Q`` (the right lobe appears)
    and ``t_P`` (the left lobe ends), a path can cross from the left lobe to
    the right one through the corridor.  When ``t_P < t_Q`` no such window
    exists.
    """

    left: Lobe
    right: Lobe
    period: float = 1.0
    slope: float = 10.0

    @property
    def t_Q(self):
        return self.right.t0

    @property
    def t_P(self):
        return self.left.t1

    @property
    def corridor(self):
        return (self.right.x0, self.left.x1)

    def base_expr(self) -> Expr:
        text = (
            f"min(1, {self.slope!r} * min({self.left.distance_expr(self.period)}, "
            f"{self.right.distance_expr(self.period)}))"
        )
        return Expr.parse(text)


def make_blocked_weight(
    geometry: TwoLobeGeometry,
    n: int = 1,
    times=None,
    x_range=None,
    amplitude: float = 1.0,
    profile: str = "flat",
    check_points: int = 201,
) -> WeightSpec:
    """Two-lobe refuge plus ``n`` bumps stacked in time across the crossing window.

    Bump ``i`` spans ``[t_{i-1}, t_i]`` with ``t_0 = t_Q`` and ``t_n = t_P``,
    so consecutive bumps touch at the interior times.  ``x_range`` defaults
    to the corridor widened by a quarter of its width on each side, into the
    lobes themselves: a bump ending exactly on a lobe wall would leave a grid
    line of zeros through which a discrete solution can still cross.  A range
    that leaves part of the corridor uncovered keeps a path open.
    """
    if n < 1:
        raise BlockedWeightError("need at least one bump")
    tq, tp = geometry.t_Q, geometry.t_P
    if not tq < tp:
        raise BlockedWeightError("crossing window is empty (t_P <= t_Q)")
    times = [] if times is None else [float(t) for t in times]
    if len(times) != n - 1:
        raise BlockedWeightError(f"n={n} needs {n - 1} interior times, got {len(times)}")
    knots = [tq] + times + [tp]
    if any(b <= a for a, b in zip(knots, knots[1:])):
        raise BlockedWeightError("times must increase strictly inside (t_Q, t_P)")
    if x_range is None:
        c0, c1 = geometry.corridor
        pad = 0.25 * (c1 - c0)
        x_range = (c0 - pad, c1 + pad)
    x0, x1 = x_range
    bumps = tuple(
        BumpComponent(_r(0.5 * (x0 + x1)), _r(0.5 * (a + b)), _r(0.5 * (x1 - x0)), _r(0.5 * (b - a)), amplitude, profile)
        for a, b in zip(knots, knots[1:])
    )
    base = geometry.base_expr()
    for i, b in enumerate(bumps):
        for j in range(i):
            if b.overlaps(bumps[j], geometry.period):
                raise BlockedWeightError(f"bumps {j + 1} and {i + 1} overlap")
        _check_containment(base, b, i, geometry.period, check_points)
    return WeightSpec(base, bumps)


def _check_containment(base: Expr, bump: BumpComponent, index, period, points):
    s = np.linspace(-1.0, 1.0, points + 2)[1:-1]
    X, Tt = np.meshgrid(bump.x_c + bump.r_x * s, bump.t_c + bump.r_t * s)
    Tt = np.mod(Tt, period)
    inside = bump.evaluate(X, Tt, period) > 0
    a0 = np.asarray(base.evaluate(X, Tt), dtype=float)
    if np.any(a0[inside] != 0.0):
        raise BlockedWeightError(f"bump {index + 1} leaks outside the refuge of the base weight")
