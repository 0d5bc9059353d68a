import numpy as np
import pytest

from bipartite_clustering.model import MemberData
from bipartite_clustering.solver import SolverConfig, l_update

_ACCEPTANCE = []


def random_instance(rng, r=6, k=2, n=10, nu=5.0, rho=1.0, sparse=False):
    """Random data plus feasible (A, B) and an L/Y pair from one ADMM step."""
    X = rng.standard_t(df=4, size=(r, n))
    B = rng.dirichlet(np.ones(k), size=r)
    if sparse:
        # knock out entries while keeping every row and column non-empty
        keep = rng.random((r, k)) < 0.6
        keep[np.arange(r), rng.integers(0, k, size=r)] = True
        keep[rng.integers(0, r, size=k), np.arange(k)] = True
        B = np.where(keep, B, 0.0)
        B /= B.sum(axis=1, keepdims=True)
    A = rng.random((r, k)) * (B > 0)
    A /= A.sum(axis=0, keepdims=True)
    p = r + k
    Y = rng.standard_normal((p, p))
    Y = 0.5 * (Y + Y.T)
    cfg = SolverConfig(k=k, nu=nu, rho=rho)
    L = l_update(B, Y, rho, k)
    return MemberData(X), A, B, L, Y, cfg


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_log():
    """Record one summary line per acceptance criterion."""

    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
