"""Bipartite graph model: data container, block Laplacian and the
rank-1 quadratic-form kernels shared by every solver step.

Per-sample scatter matrices ``x x^T`` are never formed; everything that
touches them contracts against vectors instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# tolerance for row/column sums after a simplex projection
STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True)
class MemberData:
    """Observed member data ``X`` (r x n, columns are samples).

    ``h`` caches the per-sample energies ``h_i = ||x_i||^2``.
    """

    X: np.ndarray
    h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError("member data must be a 2-D array (r x n)")
        r, n = X.shape
        if r < 2 or n < 1:
            raise InvalidInputError(f"need r >= 2 and n >= 1, got r={r}, n={n}")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("member data contains non-finite entries")
        X.flags.writeable = False
        h = np.einsum("ij,ij->j", X, X)
        h.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "h", h)

    @property
    def r(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class BlockLaplacian:
    """Rank-(p-k) Laplacian ``L = U diag(lam) U^T``."""

    L: np.ndarray
    U: np.ndarray
    lam: np.ndarray

    @property
    def p(self) -> int:
        return self.L.shape[0]

    def log_pdet(self) -> float:
        """Log of the generalized determinant (sum of log kept eigenvalues)."""
        return float(np.sum(np.log(self.lam)))


def check_row_stochastic(B, tol=STOCHASTIC_TOL):
    """Raise unless ``B`` is nonnegative with unit row sums."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise InvalidInputError("B must be a 2-D array (r x k)")
    if B.size and (B.min() < 0 or np.max(np.abs(B.sum(axis=1) - 1.0)) > tol):
        raise InvalidInputError("B must be nonnegative with rows summing to 1")
    return B


def check_column_stochastic(A, tol=STOCHASTIC_TOL):
    """Raise unless ``A`` is nonnegative with unit column sums."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError("A must be a 2-D array (r x k)")
    if A.size and (A.min() < 0 or np.max(np.abs(A.sum(axis=0) - 1.0)) > tol):
        raise InvalidInputError("A must be nonnegative with columns summing to 1")
    return A


def build_block_laplacian(B):
    """Return ``[[I_r, -B], [-B^T, Diag(B^T 1)]]`` for row-stochastic ``B``."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise InvalidInputError("B must be a 2-D array (r x k)")
    r, k = B.shape
    L = np.zeros((r + k, r + k))
    L[:r, :r] = np.eye(r)
    L[:r, r:] = -B
    L[r:, :r] = -B.T
    L[r:, r:] = np.diag(B.sum(axis=0))
    return L


def _check_pair(A, B, r=None):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape != B.shape:
        raise InvalidInputError(f"A and B must both be r x k, got {A.shape} and {B.shape}")
    if r is not None and A.shape[0] != r:
        raise InvalidInputError(f"expected {r} member rows, got {A.shape[0]}")
    return A, B


def g_matrix(A, x):
    """``G(A) = -2 A^T x x^T + diag(A^T x x^T A) 1^T`` via ``v = A^T x``.

    Returns a k x r matrix.
    """
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or x.shape != (A.shape[0],):
        raise InvalidInputError("g_matrix: A must be r x k and x of length r")
    v = A.T @ x
    return -2.0 * np.outer(v, x) + np.outer(v * v, np.ones_like(x))


def quad_forms(X, A, B):
    """Return ``h_i + tr(B G_i(A))`` for every column ``x_i`` of ``X``.

    Equals ``[x; A^T x]^T L(B) [x; A^T x]``; tiny negative rounding is
    clamped to zero.
    """
    X = np.asarray(X, dtype=float)
    A, B = _check_pair(A, B, X.shape[0])
    V = A.T @ X
    W = B.T @ X
    c = B.sum(axis=0)
    q = np.einsum("ij,ij->j", X, X) - 2.0 * np.einsum("ij,ij->j", W, V) + c @ (V * V)
    return np.where((q < 0) & (q >= -1e-12), 0.0, q)


def structured_quad_form(x, A, B):
    """Quadratic form ``h + tr(B G(A))`` for one sample ``x`` (length r)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("x must be a vector")
    return float(quad_forms(x[:, None], A, B)[0])
