"""Euclidean projection onto the probability simplex."""

import numpy as np

from .errors import InvalidInputError


_FEASIBLE_TOL = 1e-12


def _project_rows(M):
    # Sort each row in decreasing order and keep the largest prefix s with
    # u_s + alpha_s > 0, alpha_s = (1 - sum_{i<=s} u_i) / s.  The KKT system
    # of the projection is then met with alpha as the multiplier of sum(x)=1.
    m, d = M.shape
    order = np.argsort(-M, axis=1, kind="stable")
    u = np.take_along_axis(M, order, axis=1)
    alphas = (1.0 - np.cumsum(u, axis=1)) / np.arange(1, d + 1)
    positive = u + alphas > 0
    # positive is a prefix of True values; the first entry is always True
    s = d - np.argmax(positive[:, ::-1], axis=1)
    alpha = alphas[np.arange(m), s - 1]
    shifted = np.maximum(u + alpha[:, None], 0.0)
    shifted[np.arange(d)[None, :] >= s[:, None]] = 0.0
    out = np.empty_like(M)
    np.put_along_axis(out, order, shifted, axis=1)
    # rows already on the simplex (to rounding) are fixed points; this makes
    # the projection exactly idempotent
    feasible = (M.min(axis=1) >= 0) & (np.abs(M.sum(axis=1) - 1.0) <= _FEASIBLE_TOL)
    out[feasible] = M[feasible]
    return out


def _check(M):
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("simplex projection input has non-finite entries")


def project_simplex(x0):
    """Project ``x0`` onto ``{x >= 0, sum(x) = 1}``.

    Entries outside the active set come out as exact zeros; the rest equal
    ``x0_i + alpha`` for a common threshold ``alpha``.  Ties in the sort are
    broken by original index.

    Parameters
    ----------
    x0 : array_like, shape (d,)

    Returns
    -------
    ndarray, shape (d,)
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.size == 0:
        raise InvalidInputError("project_simplex expects a non-empty 1-D vector")
    _check(x0)
    return _project_rows(x0[None, :])[0]


def project_rows_simplex(M):
    """Project every row of ``M`` onto the probability simplex independently."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError("project_rows_simplex expects a 2-D matrix")
    if M.shape[0] == 0:
        return M.copy()
    if M.shape[1] == 0:
        raise InvalidInputError("cannot project rows of width 0")
    _check(M)
    return _project_rows(M)
