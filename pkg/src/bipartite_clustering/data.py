"""Data ingestion, degrees-of-freedom estimation and a synthetic generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DegenerateSpecError, EstimationError, InvalidInputError, ParseError
from .model import MemberData, build_block_laplacian

NU_MIN, NU_MAX = 2.5, 100.0


@dataclass(frozen=True)
class PriceTable:
    """A T x r table read from CSV: rows are time points, columns assets."""

    values: np.ndarray
    names: tuple


def read_table(path) -> PriceTable:
    """Parse a comma-separated table with a header row of asset identifiers.

    Every body row must have one decimal float per asset; missing cells and
    ragged rows are rejected (no imputation).
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in rows if row]
    if not rows:
        raise ParseError(f"{path}: empty file")
    names = tuple(name.strip() for name in rows[0])
    if not all(names):
        raise ParseError(f"{path}: blank asset identifier in header")
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise ParseError(f"{path}:{lineno}: expected {len(names)} cells, got {len(row)}")
        try:
            vals = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"{path}:{lineno}: missing or non-finite value")
        body.append(vals)
    if not body:
        raise ParseError(f"{path}: no data rows")
    return PriceTable(values=np.array(body, dtype=float), names=names)


def returns_from_table(table: PriceTable, already_returns: bool = False) -> MemberData:
    """Turn a price (or return) table into demeaned member data (r x n)."""
    values = table.values
    if already_returns:
        R = values
    else:
        if values.shape[0] < 2:
            raise ParseError("need at least two time points to form returns")
        if np.any(values <= 0):
            raise ParseError("prices must be strictly positive")
        R = np.diff(np.log(values), axis=0)
    X = R.T
    X = X - X.mean(axis=1, keepdims=True)
    try:
        return MemberData(X)
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from exc


def load_returns(path, already_returns: bool = False) -> MemberData:
    return returns_from_table(read_table(path), already_returns)


def estimate_nu(data) -> float:
    """Method-of-moments degrees of freedom from per-asset excess kurtosis.

    A Student-t marginal has excess kurtosis ``6 / (nu - 4)``; the median over
    assets is inverted and clamped into ``[2.5, 100]``.  Non-positive kurtosis
    maps to 100.
    """
    X = data.X if isinstance(data, MemberData) else np.asarray(data, dtype=float)
    if X.shape[1] < 4:
        raise EstimationError(f"need at least 4 samples to estimate nu, got {X.shape[1]}")
    kurt = stats.kurtosis(X, axis=1, fisher=True, bias=True)
    kurt = kurt[np.isfinite(kurt)]
    if kurt.size == 0:
        raise EstimationError("kurtosis undefined for every asset (constant rows)")
    return nu_from_kurtosis(float(np.median(kurt)))


def nu_from_kurtosis(kappa: float) -> float:
    if kappa <= 0:
        return NU_MAX
    return float(min(max(4.0 + 6.0 / kappa, NU_MIN), NU_MAX))


@dataclass(frozen=True)
class SynthSpec:
    r: int
    k: int
    n: int
    nu: float
    separation: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.k < 2 or self.r < self.k:
            raise InvalidInputError(f"need r >= k >= 2, got r={self.r}, k={self.k}")
        if self.n < 1:
            raise InvalidInputError("n must be positive")
        if not self.nu > 2:
            raise InvalidInputError(f"nu must be > 2, got {self.nu}")
        if not (1.0 / self.k < self.separation <= 1.0):
            raise DegenerateSpecError(
                f"separation must lie in (1/k, 1] = ({1.0 / self.k:.4g}, 1], got {self.separation}"
            )


def synth_weights(spec: SynthSpec):
    """Ground-truth labels (balanced, contiguous) and membership matrix."""
    labels = np.arange(spec.r) * spec.k // spec.r
    off = (1.0 - spec.separation) / (spec.k - 1)
    B = np.full((spec.r, spec.k), off)
    B[np.arange(spec.r), labels] = spec.separation
    return labels, B


def synth(spec: SynthSpec):
    """Draw member data from the heavy-tailed bipartite model.

    Samples ``x = sqrt(nu / g) U diag(lam)^(-1/2) w`` with ``w`` standard
    normal, ``g ~ chi2(nu)`` and ``(U, lam)`` the positive spectrum of the true
    block Laplacian, so that ``E[x x^T] = nu/(nu-2) L^+``.  Only the member
    coordinates are returned.

    Returns
    -------
    data : MemberData
    labels : ndarray of int
    B_true : ndarray (r x k)
    """
    labels, B = synth_weights(spec)
    L = build_block_laplacian(B)
    evals, evecs = np.linalg.eigh(L)
    pos = evals > 1e-10 * evals[-1]
    U, lam = evecs[:, pos], evals[pos]
    rng = np.random.default_rng(spec.seed)
    w = rng.standard_normal(size=(U.shape[1], spec.n))
    g = rng.chisquare(spec.nu, size=spec.n)
    Z = (U / np.sqrt(lam)) @ w
    X = Z * np.sqrt(spec.nu / g)
    return MemberData(X[: spec.r]), labels, B
