import numpy as np
import pytest

from quso import enumerate_costs, four_node_network


@pytest.fixture(scope="session")
def net():
    return four_node_network()


@pytest.fixture(scope="session")
def table(net):
    return enumerate_costs(net, 0)


def dense_gauss_solve(a, b):
    """Textbook Gaussian elimination with partial pivoting, used as an independent oracle."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        a[[col, piv]] = a[[piv, col]]
        b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


@pytest.fixture(scope="session")
def qaoa_runs(table):
    """Depth 1..5 optimizations at delta = 0 with default optimizer settings."""
    from quso.optimizer import OptimizerConfig, QAOAParams, optimize

    return {p: optimize(table, QAOAParams.constant(p), OptimizerConfig()) for p in range(1, 6)}


# acceptance criteria record (number -> list of (passed, detail)); printed after the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(number: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(p for p, _ in checks)
        detail = "; ".join(f"{'ok' if p else 'FAILED'}: {d}" for p, d in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} | {detail}")
