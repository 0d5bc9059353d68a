"""ADMM solver for bipartite k-component graph learning from member data.

The outer loop alternates four updates:

* ``L``: closed form from an eigendecomposition (rank p-k, positive spectrum);
* ``B``: one MM surrogate built at the current iterate, minimized by
  projected gradient descent over row-stochastic matrices;
* ``A``: one MM surrogate per column, minimized by projected gradient descent
  over the simplex restricted to the support of the new ``B``;
* ``Y``: dual ascent on the relaxed constraint ``L = L(B)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    DegenerateClusterError,
    InitializationError,
    InvalidInputError,
    NumericalError,
)
from .model import (
    BlockLaplacian,
    MemberData,
    build_block_laplacian,
    check_column_stochastic,
    quad_forms,
)
from .simplex import project_rows_simplex, project_simplex

logger = logging.getLogger(__name__)

# relative Frobenius change that ends an inner PGD loop
INNER_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the solver.

    ``mu`` and ``eta`` accept ``"auto"``, which selects the inverse Lipschitz
    constant of the corresponding surrogate gradient.
    """

    k: int
    nu: float
    rho: float = 1.0
    mu: Union[float, str] = "auto"
    eta: Union[float, str] = "auto"
    max_outer: int = 1000
    inner_iters: int = 50
    tol_primal: float = 1e-5
    tol_change: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k}")
        if not np.isfinite(self.nu) or self.nu <= 2:
            raise InvalidInputError(f"nu must be > 2, got {self.nu}")
        if not self.rho > 0:
            raise InvalidInputError(f"rho must be > 0, got {self.rho}")
        for name in ("mu", "eta"):
            v = getattr(self, name)
            if isinstance(v, str):
                if v != "auto":
                    raise InvalidInputError(f"{name} must be a positive number or 'auto'")
            elif not v > 0:
                raise InvalidInputError(f"{name} must be > 0, got {v}")
        if self.max_outer < 1 or self.inner_iters < 1:
            raise InvalidInputError("max_outer and inner_iters must be >= 1")
        if self.tol_primal < 0 or self.tol_change < 0:
            raise InvalidInputError("tolerances must be nonnegative")

    def check_dims(self, r: int):
        if self.k >= r:
            raise InvalidInputError(f"k must be smaller than r, got k={self.k}, r={r}")


@dataclass
class TraceEntry:
    iter: int
    objective: float
    primal_residual: float
    b_change: float


@dataclass
class SolverState:
    """Iterates of the outer loop (single owner, mutated in place by ``run``)."""

    L: BlockLaplacian
    B: np.ndarray
    A: np.ndarray
    Y: np.ndarray
    iter: int = 0
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    B: np.ndarray
    A: np.ndarray
    converged: bool
    iterations: int
    trace: tuple


# ---------------------------------------------------------------- initialization


def init_a0(r: int, k: int, kind: str = "normal", seed=0) -> np.ndarray:
    """Random column-stochastic ``A0``.

    ``"uniform"`` draws U[0, 1] entries; ``"normal"`` draws N(0, 1) entries and
    takes absolute values so that columns can be normalized to unit sums.
    """
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        A0 = rng.uniform(0.0, 1.0, size=(r, k))
    elif kind == "normal":
        A0 = np.abs(rng.standard_normal(size=(r, k)))
    else:
        raise InvalidInputError(f"unknown A0 initialization {kind!r}")
    return A0 / A0.sum(axis=0, keepdims=True)


def init_b(data: MemberData, A0, k: int) -> np.ndarray:
    """Initial ``B`` from the pseudo-inverse of the augmented second moment.

    The augmented data stacks ``X`` with the center rows ``A0^T X``; the
    member-center block of the pseudo-inverse is negated (off-diagonal
    precision entries are minus edge weights), clamped at zero and each row
    projected onto the simplex.
    """
    A0 = check_column_stochastic(A0)
    r = data.r
    if A0.shape != (r, k):
        raise InvalidInputError(f"A0 must be {r} x {k}, got {A0.shape}")
    if k >= r:
        raise InvalidInputError(f"k must be smaller than r, got k={k}, r={r}")
    Xa = np.vstack([data.X, A0.T @ data.X])
    S = Xa @ Xa.T / data.n
    if not np.any(S):
        raise InitializationError("second-moment matrix is zero; cannot initialize B")
    try:
        Sp = np.linalg.pinv(S, hermitian=True)
    except np.linalg.LinAlgError as exc:
        raise InitializationError(f"pseudo-inverse failed: {exc}") from exc
    return project_rows_simplex(np.maximum(-Sp[:r, r:], 0.0))


# ---------------------------------------------------------------- L step


def _canonical_signs(U):
    # flip each eigenvector so that its first nonzero component is positive
    idx = np.argmax(np.abs(U) > 1e-12, axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def positive_root(sigma, rho):
    """Positive root of ``rho*lam^2 - sigma*lam - 1 = 0`` (cancellation-free)."""
    sigma = np.asarray(sigma, dtype=float)
    disc = np.sqrt(sigma * sigma + 4.0 * rho)
    safe = np.where(sigma >= 0, sigma, 0.0)
    neg = np.where(sigma < 0, sigma, -1.0)
    return np.where(sigma >= 0, (safe + disc) / (2.0 * rho), 2.0 / (disc - neg))


def l_update(B, Y, rho: float, k: int) -> BlockLaplacian:
    """Closed-form minimizer of ``rho/2 ||L - L(B) + Y/rho||^2 - log det*(L)``
    over PSD matrices of rank p-k.
    """
    B = np.asarray(B, dtype=float)
    Y = np.asarray(Y, dtype=float)
    p = B.shape[0] + B.shape[1]
    if Y.shape != (p, p):
        raise InvalidInputError(f"Y must be {p} x {p}, got {Y.shape}")
    if not rho > 0:
        raise InvalidInputError("rho must be > 0")
    K = rho * build_block_laplacian(B) - Y
    K = 0.5 * (K + K.T)
    try:
        evals, evecs = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    keep = p - k
    sigma = evals[::-1][:keep]
    U = _canonical_signs(evecs[:, ::-1][:, :keep])
    lam = positive_root(sigma, rho)
    if not np.all(lam > 0):
        raise NumericalError("non-positive eigenvalue in L update")
    L = (U * lam) @ U.T
    return BlockLaplacian(L=0.5 * (L + L.T), U=U, lam=lam)


def l_subproblem_objective(L, B, Y, rho: float) -> float:
    """``rho/2 ||L - L(B) + Y/rho||_F^2 - log det*(L)`` for a PSD ``L`` whose
    positive spectrum is read from its eigenvalues above 1e-10."""
    L = np.asarray(L, dtype=float)
    evals = np.linalg.eigvalsh(0.5 * (L + L.T))
    pos = evals[evals > 1e-10]
    D = L - build_block_laplacian(B) + np.asarray(Y) / rho
    return 0.5 * rho * float(np.sum(D * D)) - float(np.sum(np.log(pos)))


# ---------------------------------------------------------------- B step


def sample_weights(data: MemberData, A, B, nu: float, p: int) -> np.ndarray:
    """MM weights ``w_i = ((p+nu)/n) / (h_i + tr(B G_i(A)) + nu)``."""
    q = quad_forms(data.X, A, B)
    return ((p + nu) / data.n) / (q + nu)


def weighted_scatter(data: MemberData, w) -> np.ndarray:
    """``X diag(w) X^T`` (symmetrized)."""
    S = (data.X * w) @ data.X.T
    return 0.5 * (S + S.T)


def b_majorizer_coeffs(A, B_l, L: BlockLaplacian, Y, data: MemberData, cfg: SolverConfig) -> np.ndarray:
    """Linear coefficient ``H`` (k x r) of the B surrogate built at ``B_l``.

    ``H = P + rho (M_rk^T + M_kr - diag(M)_k 1^T)`` with ``M = L + Y/rho`` and
    ``P = -2 A^T S_w + diag(A^T S_w A) 1^T``, ``S_w`` the MM-weighted scatter.
    """
    A = np.asarray(A, dtype=float)
    B_l = np.asarray(B_l, dtype=float)
    r, k = B_l.shape
    p = r + k
    Lm = L.L if isinstance(L, BlockLaplacian) else np.asarray(L, dtype=float)
    w = sample_weights(data, A, B_l, cfg.nu, p)
    Sw = weighted_scatter(data, w)
    ASw = A.T @ Sw
    P = -2.0 * ASw + np.outer(np.einsum("ji,ij->j", ASw, A), np.ones(r))
    M = Lm + np.asarray(Y, dtype=float) / cfg.rho
    R = M[:r, r:].T + M[r:, :r] - np.outer(np.diag(M)[r:], np.ones(r))
    return P + cfg.rho * R


def b_surrogate(B, H, rho: float) -> float:
    """``tr(B H) + rho ||B||_F^2 + rho/2 ||B^T 1||^2`` (constant dropped)."""
    B = np.asarray(B, dtype=float)
    c = B.sum(axis=0)
    return float(np.sum(B * H.T) + rho * np.sum(B * B) + 0.5 * rho * c @ c)


def b_surrogate_grad(B, H, rho: float) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    return H.T + 2.0 * rho * B + rho * np.outer(np.ones(B.shape[0]), B.sum(axis=0))


def auto_mu(r: int, rho: float) -> float:
    """Inverse of the largest eigenvalue ``rho (r + 2)`` of the B-surrogate Hessian."""
    return 1.0 / (rho * (r + 2))


def b_update(B_l, H, rho: float, mu, inner_iters: int) -> np.ndarray:
    """Projected gradient descent on the B surrogate, started at ``B_l``."""
    B = np.array(B_l, dtype=float)
    r = B.shape[0]
    if H.shape != (B.shape[1], r):
        raise InvalidInputError(f"H must be {B.shape[1]} x {r}, got {H.shape}")
    step = auto_mu(r, rho) if mu == "auto" else float(mu)
    for _ in range(inner_iters):
        grad = b_surrogate_grad(B, H, rho)
        if not np.all(np.isfinite(grad)):
            raise NumericalError("non-finite gradient in B update")
        B_new = project_rows_simplex(B - step * grad)
        change = np.linalg.norm(B_new - B) / max(np.linalg.norm(B), 1e-300)
        B = B_new
        if change < INNER_TOL:
            break
    return B


def b_subproblem_objective(B, A, L, Y, data: MemberData, cfg: SolverConfig) -> float:
    """Full B-subproblem objective: likelihood term plus augmented penalty."""
    B = np.asarray(B, dtype=float)
    r, k = B.shape
    p = r + k
    Lm = L.L if isinstance(L, BlockLaplacian) else np.asarray(L, dtype=float)
    q = quad_forms(data.X, A, B)
    lik = (p + cfg.nu) / data.n * float(np.sum(np.log1p(q / cfg.nu)))
    D = Lm - build_block_laplacian(B) + np.asarray(Y) / cfg.rho
    return lik + 0.5 * cfg.rho * float(np.sum(D * D))


# ---------------------------------------------------------------- A step


def a_majorizer_matrix(A_l, B, data: MemberData, cfg: SolverConfig) -> np.ndarray:
    """MM-weighted scatter ``S = X diag(w) X^T`` (r x r) built at ``A_l``."""
    A_l = np.asarray(A_l, dtype=float)
    r, k = A_l.shape
    w = sample_weights(data, A_l, B, cfg.nu, r + k)
    return weighted_scatter(data, w)


def a_surrogate_column(a, b_col, S) -> float:
    """``b a^T S a - 2 b_col^T S a`` with ``b = sum(b_col)``."""
    a = np.asarray(a, dtype=float)
    b_col = np.asarray(b_col, dtype=float)
    Sa = S @ a
    return float(b_col.sum() * (a @ Sa) - 2.0 * (b_col @ Sa))


def a_surrogate_grad(a, b_col, S) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b_col = np.asarray(b_col, dtype=float)
    return 2.0 * S @ (b_col.sum() * a - b_col)


def a_surrogate(A, B, S) -> float:
    """Sum of the column surrogates."""
    return sum(a_surrogate_column(A[:, j], B[:, j], S) for j in range(A.shape[1]))


def auto_eta(b_sum: float, S) -> float:
    """``1 / (2 b tr(S))``; the trace bounds the largest eigenvalue of ``S``."""
    return 1.0 / (2.0 * max(b_sum, 1e-12) * max(float(np.trace(S)), 1e-300))


def a_update(A_l, B, S, eta, inner_iters: int) -> np.ndarray:
    """Per-column projected gradient descent on the A surrogate.

    Each column lives on the simplex restricted to the support of the
    matching column of ``B`` (its exact nonzeros).
    """
    A_l = np.asarray(A_l, dtype=float)
    B = np.asarray(B, dtype=float)
    S = np.asarray(S, dtype=float)
    r, k = B.shape
    if A_l.shape != (r, k) or S.shape != (r, r):
        raise InvalidInputError("a_update: inconsistent shapes")
    mask = B > 0
    empty = np.flatnonzero(~mask.any(axis=0))
    if empty.size:
        raise DegenerateClusterError(f"cluster(s) {empty.tolist()} have no members")
    A = np.zeros_like(A_l)
    for j in range(k):
        sup = mask[:, j]
        b_col = B[:, j]
        b_sum = b_col.sum()
        step = auto_eta(b_sum, S) if eta == "auto" else float(eta)
        S_sup = S[np.ix_(sup, sup)]
        # off-support entries of b_col are zero, so the restricted gradient
        # only needs the support rows of S
        Sb = S[sup] @ b_col
        a = A_l[sup, j]
        a = project_simplex(a) if a.size else a
        for _ in range(inner_iters):
            grad = 2.0 * (b_sum * (S_sup @ a) - Sb)
            a_new = project_simplex(a - step * grad)
            change = np.linalg.norm(a_new - a) / max(np.linalg.norm(a), 1e-300)
            a = a_new
            if change < INNER_TOL:
                break
        A[sup, j] = a
    return A


def a_subproblem_objective(A, B, data: MemberData, cfg: SolverConfig) -> float:
    """``(p+nu)/n sum_i log(1 + (h_i + tr(B G_i(A)))/nu)``."""
    r, k = np.shape(B)
    q = quad_forms(data.X, A, B)
    return (r + k + cfg.nu) / data.n * float(np.sum(np.log1p(q / cfg.nu)))


# ---------------------------------------------------------------- dual and objective


def dual_update(Y, L, B, rho: float) -> np.ndarray:
    Lm = L.L if isinstance(L, BlockLaplacian) else np.asarray(L, dtype=float)
    Y_new = np.asarray(Y, dtype=float) + rho * (Lm - build_block_laplacian(B))
    return 0.5 * (Y_new + Y_new.T)


def objective(L: BlockLaplacian, B, A, data: MemberData, cfg: SolverConfig) -> float:
    """Penalized negative log-likelihood
    ``(p+nu)/n sum_i log(1 + (h_i + tr(B G_i(A)))/nu) - log det*(L)``."""
    if np.any(L.lam <= 0):
        raise NumericalError("generalized determinant needs positive eigenvalues")
    return a_subproblem_objective(A, B, data, cfg) - L.log_pdet()


# ---------------------------------------------------------------- outer loop


def labels_from_b(B) -> np.ndarray:
    """Row-wise argmax of ``B``; the lowest index wins ties."""
    return np.argmax(np.asarray(B), axis=1).astype(int)


def run(
    data: MemberData,
    cfg: SolverConfig,
    A0: Union[np.ndarray, str] = "normal",
    callback: Optional[Callable[[SolverState], None]] = None,
) -> ClusterResult:
    """Learn the bipartite graph and return cluster labels.

    ``A0`` is either a column-stochastic r x k matrix or one of
    ``"uniform"`` / ``"normal"`` (random draw seeded by ``cfg.seed``).
    ``callback`` sees the state after every outer iteration.
    """
    r, k = data.r, cfg.k
    cfg.check_dims(r)
    p = r + k
    if isinstance(A0, str):
        A = init_a0(r, k, A0, cfg.seed)
    else:
        A = check_column_stochastic(np.array(A0, dtype=float))
        if A.shape != (r, k):
            raise InvalidInputError(f"A0 must be {r} x {k}, got {A.shape}")
    B = init_b(data, A, k)
    state = SolverState(L=l_update(B, np.zeros((p, p)), cfg.rho, k), B=B, A=A, Y=np.zeros((p, p)))
    converged = False
    for it in range(1, cfg.max_outer + 1):
        state.L = l_update(state.B, state.Y, cfg.rho, k)
        H = b_majorizer_coeffs(state.A, state.B, state.L, state.Y, data, cfg)
        B_new = b_update(state.B, H, cfg.rho, cfg.mu, cfg.inner_iters)
        S = a_majorizer_matrix(state.A, B_new, data, cfg)
        state.A = a_update(state.A, B_new, S, cfg.eta, cfg.inner_iters)
        state.Y = dual_update(state.Y, state.L, B_new, cfg.rho)
        b_change = float(np.linalg.norm(B_new - state.B) / max(1.0, np.linalg.norm(state.B)))
        state.B = B_new
        state.iter = it
        resid = float(
            np.linalg.norm(state.L.L - build_block_laplacian(B_new)) / max(1.0, np.linalg.norm(state.L.L))
        )
        obj = objective(state.L, state.B, state.A, data, cfg)
        state.trace.append(TraceEntry(it, obj, resid, b_change))
        if callback is not None:
            callback(state)
        if resid < cfg.tol_primal and b_change < cfg.tol_change:
            converged = True
            break
    logger.info("solver stopped after %d iterations (converged=%s)", state.iter, converged)
    return ClusterResult(
        labels=labels_from_b(state.B),
        B=state.B,
        A=state.A,
        converged=converged,
        iterations=state.iter,
        trace=tuple(state.trace),
    )

