"""Empirical Karhunen-Loeve machinery: class means, covariance, eigen-systems.

All routines are pure functions of their inputs. Covariances use the unbiased
divisor ``N - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, DimensionError, NumericError

RANK_TOL = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """N x F sample matrix with optional labels and a missing-value mask."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Sequence[str] = ()
    missing_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"dataset must be a non-empty N x F matrix, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        n, f = values.shape
        if self.labels is not None:
            labels = np.asarray(self.labels).astype(str)
            if labels.shape != (n,):
                raise DataError(f"expected {n} labels, got {labels.shape[0]}")
            object.__setattr__(self, "labels", labels)
        names = tuple(self.feature_names) or tuple(f"f{j}" for j in range(f))
        if len(names) != f:
            raise DataError(f"expected {f} feature names, got {len(names)}")
        object.__setattr__(self, "feature_names", names)
        mask = np.zeros((n, f), bool) if self.missing_mask is None else np.asarray(self.missing_mask, bool)
        if mask.shape != (n, f):
            raise DataError("missing_mask shape does not match values")
        object.__setattr__(self, "missing_mask", mask)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            self.values[rows],
            None if self.labels is None else self.labels[rows],
            self.feature_names,
            self.missing_mask[rows],
        )


@dataclass(frozen=True)
class Eigensystem:
    """Descending eigenvalues, orthonormal eigenvectors (columns) and class mean."""

    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    effective_rank: int = field(default=-1)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, float)
        vecs = np.asarray(self.eigenvectors, float).reshape(np.shape(self.mean)[0], lam.shape[0])
        object.__setattr__(self, "mean", np.asarray(self.mean, float))
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vecs)
        if self.effective_rank < 0:
            object.__setattr__(self, "effective_rank", int(np.count_nonzero(lam > 0)))

    @property
    def rank(self) -> int:
        """Number of stored eigen-pairs (R)."""
        return self.eigenvalues.shape[0]

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def covariance(self) -> np.ndarray:
        """Reassemble sum_r lambda_r phi_r phi_r^T."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def _matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    return x


def center(data, reference_mean):
    """Subtract ``reference_mean`` from every row.

    Returns a :class:`Dataset` when given one (labels preserved), otherwise an array.
    """
    x = _matrix(data)
    mu = np.asarray(reference_mean, dtype=float)
    if mu.shape != (x.shape[1],):
        raise DimensionError(f"reference mean has length {mu.size}, data has {x.shape[1]} features")
    out = x - mu
    if isinstance(data, Dataset):
        return replace(data, values=out)
    return out


def empirical_mean(data) -> np.ndarray:
    x = _matrix(data)
    if x.shape[0] < 1:
        raise DataError("empirical mean of an empty dataset")
    return x.mean(axis=0)


def empirical_covariance(data, mean=None) -> np.ndarray:
    """Unbiased covariance ``1/(N-1) sum (v_i - mean)(v_i - mean)^T``.

    Pass ``mean=0`` (or zeros) for data already centred on a reference mean;
    ``None`` uses the sample's own mean.
    """
    x = _matrix(data)
    n, f = x.shape
    if n < 2:
        raise DataError(f"covariance needs at least 2 samples, got {n}")
    if mean is None:
        mean = x.mean(axis=0)
    mu = np.broadcast_to(np.asarray(mean, dtype=float), (f,))
    xc = x - mu
    cov = xc.T @ xc / (n - 1)
    return 0.5 * (cov + cov.T)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry (first one on ties) made positive.
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _finalize(mean, lam, vecs, rank_tol) -> Eigensystem:
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    vecs = _fix_signs(vecs[:, order])
    lam_max = lam[0] if lam.size else 0.0
    cutoff = rank_tol * lam_max if lam_max > 0 else 0.0
    small = lam <= cutoff
    lam = np.where(small, 0.0, lam)
    return Eigensystem(mean, lam, vecs, int(np.count_nonzero(~small)))


def eigendecompose(cov, rank_tol: float = RANK_TOL, mean=None) -> Eigensystem:
    """Full eigen-decomposition of a symmetric PSD matrix, eigenvalues descending.

    Eigenvalues at or below ``rank_tol * lambda_max`` (including negative round-off)
    are clamped to zero and excluded from ``effective_rank``.
    """
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionError(f"covariance must be square, got shape {c.shape}")
    if rank_tol < 0:
        raise ValueError("rank_tol must be non-negative")
    scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
    if c.size and np.max(np.abs(c - c.T)) > SYMMETRY_TOL * scale:
        raise DimensionError("covariance is not symmetric")
    try:
        lam, vecs = np.linalg.eigh(0.5 * (c + c.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    if mean is None:
        mean = np.zeros(c.shape[0])
    return _finalize(np.asarray(mean, float), lam, vecs, rank_tol)


def eigendecompose_dual(centered, rank_tol: float = RANK_TOL, mean=None) -> Eigensystem:
    """Eigen-pairs of the covariance via the N x N Gram matrix.

    For rows ``X`` already centred, the non-zero eigenvalues of
    ``X^T X / (N-1)`` equal those of ``X X^T / (N-1)``; eigenvectors are lifted
    as ``X^T u / ||X^T u||``. Only the non-zero pairs are returned, so the
    result has at most ``N`` (in practice ``N - 1``) columns. Cost is
    O(N^2 F) instead of O(F^3).
    """
    x = _matrix(centered)
    n, f = x.shape
    if n < 2:
        raise DataError(f"dual eigendecomposition needs at least 2 samples, got {n}")
    gram = x @ x.T / (n - 1)
    try:
        lam, u = np.linalg.eigh(0.5 * (gram + gram.T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(-lam, kind="stable")
    lam, u = lam[order], u[:, order]
    lam_max = lam[0] if lam.size else 0.0
    keep = lam > max(rank_tol * lam_max, 0.0)
    if lam_max <= 0:
        keep[:] = False
    lam, u = lam[keep], u[:, keep]
    lifted = x.T @ u
    norms = np.linalg.norm(lifted, axis=0)
    lifted = lifted / norms
    # one Gram-Schmidt sweep keeps columns orthonormal to machine precision
    q, r = np.linalg.qr(lifted)
    lifted = q * np.sign(np.diag(r))
    if mean is None:
        mean = np.zeros(f)
    return _finalize(np.asarray(mean, float), lam, lifted, rank_tol)


def estimate_eigensystem(centered, mean=None, rank_tol: float = RANK_TOL) -> Eigensystem:
    """Pick the Gram route when N < F, the direct route otherwise."""
    x = _matrix(centered)
    if x.shape[0] < x.shape[1]:
        return eigendecompose_dual(x, rank_tol=rank_tol, mean=mean)
    return eigendecompose(empirical_covariance(x, 0.0), rank_tol=rank_tol, mean=mean)


def truncation_error(eig: Eigensystem, m: int) -> float:
    """Energy left out by keeping the top ``m`` modes: sum_{r > m} lambda_r."""
    if not 0 <= m <= eig.rank:
        raise DimensionError(f"truncation level {m} outside [0, {eig.rank}]")
    return float(np.sum(eig.eigenvalues[m:]))


def energy_truncation(eig: Eigensystem, fraction: float) -> int:
    """Smallest M whose leading eigenvalues capture ``fraction`` of the total energy."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    lam = eig.eigenvalues
    total = float(np.sum(lam))
    if total <= 0:
        raise DataError("energy truncation of an all-zero spectrum")
    if fraction == 1.0:
        return eig.effective_rank
    cum = np.cumsum(lam)
    return int(np.searchsorted(cum, fraction * total, side="left") + 1)
