"""Problem instances: coefficients, weights, boundary data and nonlinearity.

A scenario describes the periodic-parabolic logistic problem on an interval
``[x_lo, x_hi]`` with period ``T``.  Coefficients are closed-form expressions
in ``(x, t)``; they are always evaluated at ``t mod T``.

Scenario files are UTF-8 ``key = value`` text, one entry per line, ``#``
starts a comment::

    domain    = 0 1
    period    = 1
    grid      = 99 64
    diffusion = 1
    drift     = 0
    potential = 0
    m         = 1
    a.base    = 0
    a.bump    = 0.5 0.5 0.2 0.3 1
    bc.lo     = dirichlet
    bc.hi     = robin -0.5
    f         = power 1
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .expr import Expr, ExprError

__all__ = [
    "BoundaryCondition",
    "BumpComponent",
    "WeightSpec",
    "NonlinearitySpec",
    "ScenarioSpec",
    "ScenarioError",
    "HypothesisCheck",
    "ValidationReport",
    "parse_scenario",
    "serialize_scenario",
    "load_scenario",
    "validate_hypotheses",
    "eval_field",
    "FIELDS",
]

FIELDS = ("diffusion", "drift", "potential", "m", "a")


class ScenarioError(ValueError):
    """Invalid scenario content; ``line`` is set when the error comes from a file."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = "dirichlet"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin"):
            raise ScenarioError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.beta != 0.0:
            raise ScenarioError("dirichlet boundary takes no beta")

    @property
    def is_dirichlet(self):
        return self.kind == "dirichlet"

    def __str__(self):
        return "dirichlet" if self.is_dirichlet else f"robin {self.beta!r}"


def _smooth_profile(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _poly_profile(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s**2) ** 2, 0.0)


def _flat_profile(s):
    s = np.asarray(s, dtype=float)
    return np.clip(10.0 * (1.0 - np.abs(s)), 0.0, 1.0)


PROFILES = {"smooth": _smooth_profile, "poly": _poly_profile, "flat": _flat_profile}


@dataclass(frozen=True)
class BumpComponent:
    """Compactly supported bump ``A g((x-x_c)/r_x) g((t-t_c)/r_t)``, periodic in t.

    ``profile`` selects g: ``smooth`` is the C-infinity bump
    ``exp(1 - 1/(1-s^2))``; ``poly`` is ``(1-s^2)^2``; ``flat`` equals 1 except
    on linear shoulders over the outer tenth of the support.  Bumps that must
    block a corridor at finite resolution need the non-flat tails of the last
    two.
    """

    x_c: float
    t_c: float
    r_x: float
    r_t: float
    amplitude: float
    profile: str = "smooth"

    def __post_init__(self):
        if self.r_x <= 0 or self.r_t <= 0:
            raise ScenarioError("bump half-widths must be positive")
        if self.amplitude <= 0:
            raise ScenarioError("bump amplitude must be positive")
        if self.profile not in PROFILES:
            raise ScenarioError(f"unknown bump profile {self.profile!r}")

    def evaluate(self, x, t, period):
        dt = np.mod(np.asarray(t, dtype=float) - self.t_c + 0.5 * period, period) - 0.5 * period
        g = PROFILES[self.profile]
        sx = (np.asarray(x, dtype=float) - self.x_c) / self.r_x
        return self.amplitude * g(sx) * g(dt / self.r_t)

    def x_range(self):
        return (self.x_c - self.r_x, self.x_c + self.r_x)

    def t_range(self):
        return (self.t_c - self.r_t, self.t_c + self.r_t)

    def overlaps(self, other, period):
        """True when the open supports intersect (touching closures are allowed)."""
        (a0, a1), (b0, b1) = self.x_range(), other.x_range()
        if min(a1, b1) - max(a0, b0) <= 1e-12:
            return False
        gap = abs(math.remainder(self.t_c - other.t_c, period))
        return gap < self.r_t + other.r_t - 1e-12

    def __str__(self):
        vals = " ".join(repr(float(v)) for v in (self.x_c, self.t_c, self.r_x, self.r_t, self.amplitude))
        return vals if self.profile == "smooth" else f"{vals} {self.profile}"


@dataclass(frozen=True)
class WeightSpec:
    base: Expr = field(default_factory=lambda: Expr.const(1.0))
    bumps: tuple = ()

    def evaluate(self, x, t, period):
        out = np.asarray(self.base.evaluate(x, t), dtype=float)
        for bump in self.bumps:
            out = out + bump.evaluate(x, t, period)
        return out


@dataclass(frozen=True)
class NonlinearitySpec:
    """``f(u) = u^p`` for ``u >= 0`` (extended oddly to ``u < 0``)."""

    exponent: float = 1.0

    def __post_init__(self):
        if not self.exponent >= 1.0:
            raise ScenarioError("power exponent must be >= 1")

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return np.sign(u) * np.abs(u) ** self.exponent

    def df(self, u):
        u = np.asarray(u, dtype=float)
        return self.exponent * np.abs(u) ** (self.exponent - 1.0)

    def __str__(self):
        return f"power {self.exponent!r}"


@dataclass(frozen=True)
class ScenarioSpec:
    x_lo: float = 0.0
    x_hi: float = 1.0
    period: float = 1.0
    diffusion: Expr = field(default_factory=lambda: Expr.const(1.0))
    drift: Expr = field(default_factory=lambda: Expr.const(0.0))
    potential: Expr = field(default_factory=lambda: Expr.const(0.0))
    m: Expr = field(default_factory=lambda: Expr.const(1.0))
    weight: WeightSpec = field(default_factory=WeightSpec)
    bc_lo: BoundaryCondition = field(default_factory=BoundaryCondition)
    bc_hi: BoundaryCondition = field(default_factory=BoundaryCondition)
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    default_resolution: tuple = (99, 64)
    mu: float = 1e-9

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ScenarioError("domain requires x_lo < x_hi", key="domain")
        if not self.period > 0:
            raise ScenarioError("period must be positive", key="period")
        nx, nt = self.default_resolution
        if nx < 1 or nt < 1:
            raise ScenarioError("grid sizes must be positive", key="grid")
        for i, b in enumerate(self.weight.bumps):
            lo, hi = b.x_range()
            if lo < self.x_lo - 1e-12 or hi > self.x_hi + 1e-12:
                raise ScenarioError(f"bump {i + 1} leaves the spatial domain", key="a.bump")
            if b.r_t > 0.5 * self.period + 1e-12:
                raise ScenarioError(f"bump {i + 1} wraps onto itself in time", key="a.bump")
            for j in range(i):
                if b.overlaps(self.weight.bumps[j], self.period):
                    raise ScenarioError("bump supports not disjoint", key="a.bump")

    @property
    def length(self):
        return self.x_hi - self.x_lo

    def sample(self, which, x, t):
        tt = np.mod(np.asarray(t, dtype=float), self.period)
        if which == "a":
            return self.weight.evaluate(x, tt, self.period)
        if which not in FIELDS:
            raise KeyError(f"unknown field {which!r}")
        return getattr(self, which).evaluate(x, tt)

    def digest(self):
        return hashlib.sha256(serialize_scenario(self).encode("utf-8")).hexdigest()[:16]

    def replace(self, **changes):
        return replace(self, **changes)


def eval_field(spec: ScenarioSpec, which: str, x: float, t: float) -> float:
    if not spec.x_lo - 1e-12 <= x <= spec.x_hi + 1e-12:
        raise ScenarioError(f"x={x} outside [{spec.x_lo}, {spec.x_hi}]")
    return float(spec.sample(which, x, t))


# -- file format -------------------------------------------------------------

_EXPR_KEYS = {"diffusion": "diffusion", "drift": "drift", "potential": "potential", "m": "m"}
_KNOWN = set(_EXPR_KEYS) | {"domain", "period", "grid", "a.base", "a.bump", "bc.lo", "bc.hi", "f", "mu"}


def _floats(value, count, key, line):
    parts = value.split()
    if len(parts) != count:
        raise ScenarioError(f"expected {count} number(s), got {len(parts)}", key, line)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ScenarioError(f"not a number: {exc}", key, line) from None


def _boundary(value, key, line):
    parts = value.split()
    if parts == ["dirichlet"]:
        return BoundaryCondition("dirichlet")
    if len(parts) == 2 and parts[0] == "robin":
        (beta,) = _floats(parts[1], 1, key, line)
        return BoundaryCondition("robin", beta)
    raise ScenarioError("expected 'dirichlet' or 'robin <beta>'", key, line)


def parse_scenario(text: str) -> ScenarioSpec:
    kw = {}
    base = None
    bumps = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ScenarioError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in content.split("=", 1))
        if key not in _KNOWN:
            raise ScenarioError("unknown key", key, lineno)
        if key != "a.bump" and key in seen:
            raise ScenarioError(f"duplicate key (first on line {seen[key]})", key, lineno)
        seen[key] = lineno
        if not value:
            raise ScenarioError("missing value", key, lineno)
        try:
            if key == "domain":
                kw["x_lo"], kw["x_hi"] = _floats(value, 2, key, lineno)
                if kw["x_lo"] >= kw["x_hi"]:
                    raise ScenarioError("domain requires x_lo < x_hi", key, lineno)
            elif key == "period":
                (kw["period"],) = _floats(value, 1, key, lineno)
            elif key == "mu":
                (kw["mu"],) = _floats(value, 1, key, lineno)
            elif key == "grid":
                nx, nt = _floats(value, 2, key, lineno)
                if nx != int(nx) or nt != int(nt):
                    raise ScenarioError("grid sizes must be integers", key, lineno)
                kw["default_resolution"] = (int(nx), int(nt))
            elif key in _EXPR_KEYS:
                kw[_EXPR_KEYS[key]] = Expr.parse(value)
            elif key == "a.base":
                base = Expr.parse(value)
            elif key == "a.bump":
                parts = value.split()
                profile = "smooth"
                if len(parts) == 6:
                    profile = parts.pop()
                x_c, t_c, r_x, r_t, amp = _floats(" ".join(parts), 5, key, lineno)
                bumps.append(BumpComponent(x_c, t_c, r_x, r_t, amp, profile))
            elif key in ("bc.lo", "bc.hi"):
                kw["bc_" + key[3:]] = _boundary(value, key, lineno)
            elif key == "f":
                parts = value.split()
                if len(parts) != 2 or parts[0] != "power":
                    raise ScenarioError("expected 'power <p>'", key, lineno)
                (p,) = _floats(parts[1], 1, key, lineno)
                kw["nonlinearity"] = NonlinearitySpec(p)
        except ExprError as exc:
            raise ScenarioError(str(exc), key, lineno) from None
        except ScenarioError as exc:
            if exc.line is None:
                raise ScenarioError(str(exc), key, lineno) from None
            raise
    kw["weight"] = WeightSpec(base if base is not None else Expr.const(1.0), tuple(bumps))
    try:
        return ScenarioSpec(**kw)
    except ScenarioError as exc:
        if exc.key is not None and exc.key in seen:
            raise ScenarioError(str(exc).split(" (")[0], exc.key, seen[exc.key]) from None
        raise


def serialize_scenario(spec: ScenarioSpec) -> str:
    lines = [
        f"domain = {spec.x_lo!r} {spec.x_hi!r}",
        f"period = {spec.period!r}",
        f"grid = {spec.default_resolution[0]} {spec.default_resolution[1]}",
        f"diffusion = {spec.diffusion}",
        f"drift = {spec.drift}",
        f"potential = {spec.potential}",
        f"m = {spec.m}",
        f"a.base = {spec.weight.base}",
    ]
    lines += [f"a.bump = {b}" for b in spec.weight.bumps]
    lines += [
        f"bc.lo = {spec.bc_lo}",
        f"bc.hi = {spec.bc_hi}",
        f"f = {spec.nonlinearity}",
        f"mu = {spec.mu!r}",
    ]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> ScenarioSpec:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


# -- hypotheses ----------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.name != "boundary_positive_a")

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self):
        return [f"{c.name}: {'pass' if c.passed else 'FAIL'} ({c.detail})" for c in self.checks]


F_SURROGATE_BOUND = 1e6


def validate_hypotheses(spec: ScenarioSpec, resolution=None) -> ValidationReport:
    """Check the standing hypotheses on a sample grid.

    Hoelder regularity is not checked; coefficients built from the expression
    grammar are at least continuous.  ``f -> infinity`` is replaced by the finite
    surrogate ``f(u_K) > F_SURROGATE_BOUND`` on a geometric ladder.
    """
    nx, nt = resolution or spec.default_resolution
    if nx <= 0 or nt <= 0:
        raise ScenarioError("resolution must be positive")
    x = np.linspace(spec.x_lo, spec.x_hi, nx + 2)
    t = np.linspace(0.0, spec.period, nt + 1)
    X, Tt = np.meshgrid(x, t)
    checks = []

    d = spec.sample("diffusion", X, Tt)
    dmin = float(np.min(d))
    checks.append(HypothesisCheck("ellipticity", bool(dmin >= spec.mu and np.all(np.isfinite(d))), f"min d = {dmin:.6g}, mu = {spec.mu:.3g}"))

    worst = 0.0
    for name in FIELDS:
        v = spec.sample(name, x, np.zeros_like(x))
        w = spec.sample(name, x, np.full_like(x, spec.period))
        worst = max(worst, float(np.max(np.abs(v - w))))
    checks.append(HypothesisCheck("periodicity", worst <= 1e-12, f"max |f(x,0)-f(x,T)| = {worst:.3g}"))

    finite = all(np.all(np.isfinite(spec.sample(n, X, Tt))) for n in FIELDS)
    checks.append(HypothesisCheck("finite_coefficients", bool(finite), "all fields finite on grid"))

    a = spec.sample("a", X, Tt)
    amin, amax = float(np.min(a)), float(np.max(a))
    checks.append(HypothesisCheck("weight_a", amin >= 0.0 and amax > 0.0, f"min a = {amin:.6g}, max a = {amax:.6g}"))

    ladder = np.geomspace(1e-3, 1e7, 41)
    fv = spec.nonlinearity.f(ladder)
    mono = bool(np.all(np.diff(fv) > 0))
    f0 = float(spec.nonlinearity.f(0.0))
    checks.append(
        HypothesisCheck(
            "nonlinearity",
            f0 == 0.0 and mono and fv[-1] > F_SURROGATE_BOUND,
            f"f(0) = {f0}, increasing on ladder = {mono}, f(u_K) = {fv[-1]:.3g} (surrogate for f -> inf)",
        )
    )

    edge = np.concatenate([a[:, 0], a[:, -1]])
    checks.append(HypothesisCheck("boundary_positive_a", bool(np.min(edge) > 0.0), f"min a on boundary = {float(np.min(edge)):.6g}"))
    return ValidationReport(tuple(checks))
