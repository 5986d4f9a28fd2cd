"""Regenerate the bundled scenario files.

    python3 scripts/make_scenarios.py [OUT_DIR]

Lobe times sit on odd multiples of 1/1024, so no time level of a mesh with
nt <= 512 (a power of two) lands on the instant a lobe or bump starts or ends.
"""

import sys
from pathlib import Path

from pplogistic.expr import Expr
from pplogistic.scenario import BoundaryCondition, ScenarioSpec, WeightSpec, serialize_scenario
from pplogistic.zeroset import Lobe, TwoLobeGeometry, make_blocked_weight

NEUMANN = BoundaryCondition("robin", 0.0)

LEFT = Lobe(0.15, 0.6, -308 / 1024, 619 / 1024)
RIGHT = Lobe(0.4, 0.85, 309 / 1024, 924 / 1024)
LOBES = TwoLobeGeometry(LEFT, RIGHT)
GAP = TwoLobeGeometry(Lobe(0.15, 0.6, -308 / 1024, 401 / 1024), Lobe(0.4, 0.85, 521 / 1024, 924 / 1024))

TUBE = "min(1, 1000 * max(0, abs(x - 0.5) - 0.15))"
MOVING_TUBE = "min(1, 1000 * max(0, abs(x - 0.5 - 0.1 * sin(2 * pi * t)) - 0.15))"


def catalog():
    lobe = dict(default_resolution=(99, 128))
    return {
        "heat": ("Dirichlet heat operator, a = m = 1", ScenarioSpec(default_resolution=(99, 64))),
        "neumann": (
            "Neumann ends, a = m = 1",
            ScenarioSpec(bc_lo=NEUMANN, bc_hi=NEUMANN, default_resolution=(9, 16)),
        ),
        "neumann_mt": (
            "Neumann ends, spatially constant m(t) = sin(2 pi t)",
            ScenarioSpec(m=Expr.parse("sin(2 * pi * t)"), bc_lo=NEUMANN, bc_hi=NEUMANN, default_resolution=(3, 16384)),
        ),
        "cos_weight": (
            "Dirichlet ends, m = cos(pi x), odd about x = 1/2",
            ScenarioSpec(m=Expr.parse("cos(pi * x)"), default_resolution=(99, 16)),
        ),
        "tube": (
            "refuge |x - 0.5| <= 0.15 for all t",
            ScenarioSpec(weight=WeightSpec(Expr.parse(TUBE)), default_resolution=(200, 64)),
        ),
        "moving_tube": (
            "refuge of width 0.3 whose centre oscillates in time",
            ScenarioSpec(weight=WeightSpec(Expr.parse(MOVING_TUBE)), default_resolution=(200, 256)),
        ),
        "lobes": ("two overlapping lobes, no bump", ScenarioSpec(weight=WeightSpec(LOBES.base_expr()), **lobe)),
        "blocked": ("two lobes, one bump across the crossing window", ScenarioSpec(weight=make_blocked_weight(LOBES, 1), **lobe)),
        "chain2": (
            "two lobes, chain of two bumps",
            ScenarioSpec(weight=make_blocked_weight(LOBES, 2, [461 / 1024]), **lobe),
        ),
        "chain3": (
            "two lobes, chain of three bumps",
            ScenarioSpec(weight=make_blocked_weight(LOBES, 3, [411 / 1024, 515 / 1024]), **lobe),
        ),
        "side_bump": (
            "two lobes, bump leaving the left part of the corridor open",
            ScenarioSpec(weight=make_blocked_weight(LOBES, 1, x_range=(0.48, 0.65)), **lobe),
        ),
        "lobes_gap": ("two lobes that never coexist on the crossing side", ScenarioSpec(weight=WeightSpec(GAP.base_expr()), **lobe)),
    }


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (title, spec) in catalog().items():
        (out / f"{name}.scn").write_text(f"# {title}\n" + serialize_scenario(spec), encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src" / "pplogistic" / "scenarios")
