import numpy as np
import pytest

from minsvd.core import LinearOperator


class CountingOperator(LinearOperator):
    """Dense operator that counts every product with A and with A.T."""

    def __init__(self, M):
        base = LinearOperator.from_dense(M)
        super().__init__(base.kind, base.shape, base.data)
        self.n_A = 0
        self.n_At = 0

    def matvec(self, x):
        self.n_A += 1
        return super().matvec(x)

    def rmatvec(self, y):
        self.n_At += 1
        return super().rmatvec(y)

    def matmat(self, X):
        self.n_A += np.shape(X)[1]
        return super().matmat(X)

    def rmatmat(self, Y):
        self.n_At += np.shape(Y)[1]
        return super().rmatmat(Y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def subspace_sin(U, V):
    """Largest principal-angle sine between the column spans of U and V."""
    Qu, _ = np.linalg.qr(U)
    Qv, _ = np.linalg.qr(V)
    s = np.linalg.svd(Qu.T @ Qv, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - s.min() ** 2)))


def pytest_configure(config):
    config._acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(lines[key])
