import math

import pytest

from pplogistic.scenario import parse_scenario
from pplogistic.suite import load_suite

PI2 = math.pi**2


def scenario_text(
    domain="0 1",
    period="1",
    grid="9 16",
    diffusion="1",
    drift="0",
    potential="0",
    m="1",
    a="1",
    bumps=(),
    lo="dirichlet",
    hi="dirichlet",
    f="power 1",
):
    lines = [
        f"domain = {domain}",
        f"period = {period}",
        f"grid = {grid}",
        f"diffusion = {diffusion}",
        f"drift = {drift}",
        f"potential = {potential}",
        f"m = {m}",
        f"a.base = {a}",
        *(f"a.bump = {b}" for b in bumps),
        f"bc.lo = {lo}",
        f"bc.hi = {hi}",
        f"f = {f}",
    ]
    return "\n".join(lines) + "\n"


def make_spec(**kw):
    return parse_scenario(scenario_text(**kw))


@pytest.fixture(scope="session")
def bundled():
    return load_suite()
