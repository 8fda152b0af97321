import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def dense_1q(u, site, n):
    """Kronecker embedding; site 0 is the rightmost factor."""
    return np.kron(np.kron(np.eye(1 << (n - 1 - site)), u), np.eye(1 << site))


def dense_2q(u, i, j, n):
    """Element-wise embedding of a 4x4 ``u`` with basis ``2*b_i + b_j``."""
    d = 1 << n
    out = np.zeros((d, d), dtype=complex)
    rest = ~((1 << i) | (1 << j))
    for col in range(d):
        bi, bj = (col >> i) & 1, (col >> j) & 1
        for oi in (0, 1):
            for oj in (0, 1):
                row = (col & rest) | (oi << i) | (oj << j)
                out[row, col] = u[2 * oi + oj, 2 * bi + bj]
    return out


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
