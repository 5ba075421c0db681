import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dpwilcoxon import PairedDataset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Table 1: five paired observations
TABLE1 = [(9, 18), (2, 11), (3, 3), (8, 10), (9, 8)]


@pytest.fixture
def table1():
    return PairedDataset.from_pairs(TABLE1)


@pytest.fixture
def table1_csv(tmp_path):
    path = tmp_path / "pairs.csv"
    path.write_text("u,v\n9,18\n2,11\n3,3\n8,10\n9,8\n")
    return path


@pytest.fixture
def zero_noise(monkeypatch):
    """Force every Laplace draw used for releases to zero."""
    import dpwilcoxon.privacy as privacy
    import dpwilcoxon.tc as tc

    def fake(rng, scale, size=None):
        return 0.0 if size is None else np.zeros(size)

    monkeypatch.setattr(privacy, "laplace_sample", fake)
    monkeypatch.setattr(tc, "laplace_sample", fake)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(mod.TITLES):
        cases = mod.RESULTS.get(k)
        if not cases:
            tr.write_line(f"criterion {k:>2}: NOT RUN  {mod.TITLES[k]}")
            continue
        ok = all(c[1] for c in cases)
        failed = [c[0] for c in cases if not c[1]]
        tail = f" (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {mod.TITLES[k]}{tail}")
