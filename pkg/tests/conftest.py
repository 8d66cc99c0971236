import warnings
from pathlib import Path

import numpy as np
import pytest
import scipy.signal
from hypothesis import settings

from hinflimit.gamma import sensitivity_plant
from hinflimit.zeros import JordanChainWarning

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def tf_plant(zeros, poles):
    """Sensitivity plant for ``P(s) = prod(s - z) / prod(s - p)``."""
    A, B, C, _ = scipy.signal.tf2ss(np.poly(zeros), np.poly(poles))
    return sensitivity_plant(A, B[:, 0], C[0])


@pytest.fixture(autouse=True)
def _quiet_jordan():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", JordanChainWarning)
        yield


@pytest.fixture
def example1_path():
    return DATA / "example1.json"


# -- acceptance summary: one line per criterion ---------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    n = props.get("criterion")
    if n is None or (report.when != "call" and not report.failed and not report.skipped):
        return
    entry = _CRITERIA.setdefault(n, {"failed": [], "xfailed": [], "passed": [], "notes": []})
    name = report.nodeid.split("::")[-1]
    if hasattr(report, "wasxfail"):
        if report.skipped:
            entry["xfailed"].append(name)
    elif report.failed:
        entry["failed"].append(name)
    elif report.passed and report.when == "call":
        entry["passed"].append(name)
    entry["notes"] += [v for k, v in report.user_properties if k == "note"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        ok = not e["failed"] and not e["xfailed"]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
        bad = e["failed"] + [f"{x} (known, see ledger)" for x in e["xfailed"]]
        if bad:
            line += "  failing: " + ", ".join(bad)
        terminalreporter.write_line(line)
        for note in dict.fromkeys(e["notes"]):
            terminalreporter.write_line(f"    {note}")
