import subprocess
import sys
from pathlib import Path

from pplogistic.scenario import validate_hypotheses
from pplogistic.suite import REQUIRED, bundled_suite_dir

ROOT = Path(__file__).resolve().parents[1]


def test_generator_reproduces_bundled_files(tmp_path):
    subprocess.run([sys.executable, str(ROOT / "scripts" / "make_scenarios.py"), str(tmp_path)], check=True)
    bundled = {p.name: p.read_bytes() for p in bundled_suite_dir().glob("*.scn")}
    fresh = {p.name: p.read_bytes() for p in tmp_path.glob("*.scn")}
    assert fresh == bundled


def test_bundled_scenarios_satisfy_hypotheses(bundled):
    assert set(REQUIRED) <= set(bundled)
    for name, spec in bundled.items():
        assert validate_hypotheses(spec).ok, name
