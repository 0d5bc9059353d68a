"""Clustering quality measures: accuracy, purity, ARI, modularity and CHI.

All label-based scores divide by the number of labelled members.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError, UndefinedMetricError
from .model import MemberData
from .solver import labels_from_b

__all__ = [
    "labels_from_b",
    "as_labels",
    "contingency",
    "accuracy",
    "purity",
    "ari",
    "modularity",
    "chi",
]


def as_labels(labels, k=None) -> np.ndarray:
    """Validate a label vector (nonnegative integers, optionally < k)."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise InvalidInputError("labels must be a 1-D vector")
    if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
        raise InvalidInputError("labels must be integers")
    arr = arr.astype(int)
    if arr.size and arr.min() < 0:
        raise InvalidInputError("labels must be nonnegative")
    if k is not None and arr.size and arr.max() >= k:
        raise InvalidInputError(f"labels must be < {k}")
    return arr


def _pair(truth, pred):
    truth, pred = as_labels(truth), as_labels(pred)
    if truth.shape != pred.shape:
        raise InvalidInputError(f"label vectors differ in length: {truth.size} vs {pred.size}")
    if truth.size == 0:
        raise UndefinedMetricError("empty label vectors")
    return truth, pred


def contingency(truth, pred) -> np.ndarray:
    """Counts ``C[t, c]`` of members with true label t and predicted label c."""
    truth, pred = _pair(truth, pred)
    C = np.zeros((truth.max() + 1, pred.max() + 1), dtype=np.int64)
    np.add.at(C, (truth, pred), 1)
    return C


def accuracy(truth, pred) -> float:
    """Fraction of members matched under the best one-to-one relabelling.

    The maximization over label permutations is solved as an assignment
    problem on the contingency table.
    """
    C = contingency(truth, pred)
    rows, cols = linear_sum_assignment(C, maximize=True)
    return float(C[rows, cols].sum() / C.sum())


def purity(truth, pred) -> float:
    C = contingency(truth, pred)
    return float(C.max(axis=0).sum() / C.sum())


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index from the contingency table."""
    C = contingency(truth, pred)
    n = int(C.sum())
    if n < 2:
        raise UndefinedMetricError("ARI needs at least two members")
    index = _comb2(C).sum()
    sum_a = _comb2(C.sum(axis=1)).sum()
    sum_b = _comb2(C.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0:
        # both partitions trivial in the same way (all singletons or one block)
        return 1.0
    return float((index - expected) / denom)


def modularity(B, labels, center_labels=None) -> float:
    """Newman modularity of the weighted bipartite member/center graph.

    Member i carries ``labels[i]``; center j carries ``center_labels[j]``,
    which defaults to j.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise InvalidInputError("B must be a 2-D array")
    r, k = B.shape
    lab = as_labels(labels)
    if lab.size != r:
        raise InvalidInputError(f"expected {r} labels, got {lab.size}")
    if np.any(B < 0):
        raise InvalidInputError("edge weights must be nonnegative")
    two_m = 2.0 * B.sum()
    if two_m <= 0:
        raise UndefinedMetricError("graph has no edges")
    centers = np.arange(k) if center_labels is None else as_labels(center_labels)
    if centers.size != k:
        raise InvalidInputError(f"expected {k} center labels, got {centers.size}")
    node_labels = np.concatenate([lab, centers])
    deg = np.concatenate([B.sum(axis=1), B.sum(axis=0)])
    K = node_labels.max() + 1
    # within-community edge weight (each member-center edge counted twice)
    within = 2.0 * B[lab[:, None] == centers[None, :]].sum()
    comm_deg = np.bincount(node_labels, weights=deg, minlength=K)
    return float(within / two_m - np.sum((comm_deg / two_m) ** 2))


def chi(data, labels) -> float:
    """Calinski-Harabasz index using each member's data row as its features."""
    X = data.X if isinstance(data, MemberData) else np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    lab = as_labels(labels)
    r = X.shape[0]
    if lab.size != r:
        raise InvalidInputError(f"expected {r} labels, got {lab.size}")
    groups = np.unique(lab)
    k_eff = groups.size
    if k_eff < 2:
        raise UndefinedMetricError("CHI needs at least two non-empty clusters")
    mean = X.mean(axis=0)
    between = within = 0.0
    for g in groups:
        Xg = X[lab == g]
        mg = Xg.mean(axis=0)
        between += Xg.shape[0] * float(np.sum((mg - mean) ** 2))
        within += float(np.sum((Xg - mg) ** 2))
    if within == 0 or r == k_eff:
        raise UndefinedMetricError("CHI undefined: zero within-cluster dispersion")
    return (between / (k_eff - 1)) / (within / (r - k_eff))
