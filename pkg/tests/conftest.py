import numpy as np
import pytest

from sigquality import SignatureSample, synth_corpus


def random_sample(rng: np.random.Generator, n_points: int | None = None, *, pressure: bool = True,
                  lifts: bool = True, **meta) -> SignatureSample:
    """A random integer pen trajectory with optional pen lifts."""
    n = int(rng.integers(6, 120)) if n_points is None else n_points
    steps = rng.integers(-40, 41, size=(n, 2))
    xy = np.cumsum(steps, axis=0) + rng.integers(-500, 500, size=2)
    t = np.cumsum(rng.integers(0, 20, size=n))
    down = np.ones(n, dtype=bool)
    if lifts and n > 8:
        for _ in range(int(rng.integers(0, 3))):
            k = int(rng.integers(2, n - 2))
            down[k] = False
    down[:2] = True
    p = rng.integers(0, 1024, size=n) if pressure else None
    return SignatureSample(xy[:, 0], xy[:, 1], t, p, down, **meta)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus():
    return synth_corpus(3, n_users=6, samples_per_user=10, sessions=2, consistency=(0.6, 0.95),
                        forgeries_per_user=2)


# ---------------------------------------------------------------------------
# one PASS / FAIL / SKIP line per acceptance criterion

_CRITERIA: dict[str, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "measured")
        if report.skipped and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2].removeprefix("Skipped: ")
        _CRITERIA[item.nodeid] = [marker.args[0], status, detail]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label, status, detail in _CRITERIA.values():
        line = f"{status:4}  {label}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
