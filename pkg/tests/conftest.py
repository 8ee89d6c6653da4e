import numpy as np
import pytest

from matgeom.geometry import laplacian_apply, make_context

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def elementary(n, i, j):
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def brute_force_superoperator(ctx):
    """Delta assembled column by column from its action on elementary matrices.

    Column-stacking: vec(E_ij) is basis vector i + n j.
    """
    n = ctx.n
    mat = np.zeros((n * n, n * n), dtype=complex)
    for j in range(n):
        for i in range(n):
            image = laplacian_apply(ctx, elementary(n, i, j))
            for q in range(n):
                for p in range(n):
                    mat[p + n * q, i + n * j] = image[p, q]
    return mat


def loop_commutator(w, a):
    """[w, a] by explicit index sums."""
    n = w.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(w[i, k] * a[k, j] - a[i, k] * w[k, j] for k in range(n))
    return out


@pytest.fixture(scope="session")
def ctx2():
    return make_context(2)


@pytest.fixture(scope="session")
def ctx4():
    return make_context(4)


ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number:2d}: {title} ({detail})"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
