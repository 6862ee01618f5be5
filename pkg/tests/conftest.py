import os
import shutil
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402

from sre_falsify import core as C  # noqa: E402
from sre_falsify import events as ev  # noqa: E402
from sre_falsify import solver as _solver  # noqa: E402
from sre_falsify import sre as S  # noqa: E402

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
    derandomize=True,
)
settings.load_profile("repo")

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "bench"

HAVE_Z3 = shutil.which("z3") is not None
needs_z3 = pytest.mark.skipif(not HAVE_Z3, reason="z3 binary not on PATH")


@pytest.fixture(autouse=True)
def test_signature():
    """Every test starts from the small put/get signature and cold caches."""
    old = ev.set_signature(oracles.SIG)
    S.clear_caches()
    C.clear_caches()
    yield oracles.SIG
    ev.set_signature(old)


@pytest.fixture(scope="session", autouse=True)
def smt_solver():
    if HAVE_Z3:
        s = _solver.SmtSolver()
        old = _solver.set_solver(s)
        yield s
        _solver.set_solver(old)
        s.close()
    else:
        yield _solver.get_solver()
