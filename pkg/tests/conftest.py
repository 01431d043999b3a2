import numpy as np
import pytest


def bisect(fun, lo, hi, tol=1e-14, max_iter=400):
    """Plain bisection on a sign change; reference solver for tests."""
    flo = fun(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


@pytest.fixture
def two_cluster():
    return np.concatenate([np.zeros(100), np.full(100, 5.0)]).astype(complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


TWO_CLUSTER_EDGE = None


def two_cluster_edge_oracle():
    """Left-cluster real edge of diag(0 x 100, 5 x 100): root of 1/(2r^2) + 1/(2(5-r)^2) = 1."""
    return bisect(lambda r: 0.5 / r ** 2 + 0.5 / (5 - r) ** 2 - 1.0, 0.5, 1.0)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def acceptance_line():
    def record(num, title, passed, detail, elapsed, limit):
        ok = passed and elapsed <= limit
        ACCEPTANCE_LINES[num] = (f"criterion {num:>4} {'PASS' if ok else 'FAIL'}  {title}: {detail}  "
                                 f"[{elapsed:.1f} s / limit {limit:.0f} s]")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(str(k).rstrip("abcdefgh")), str(k))):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
