"""Distribution-free Markov concentration bounds for projected class samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .kle import Eigensystem
from .subspace import SubspaceBasis


@dataclass(frozen=True)
class MarkovBound:
    """``Pr(||P_S (v - E v)||^2 >= eps^2) <= rhs``.

    ``per_term[m, r] = lambda_r <phi_r, s_m>^2``. Values above 1 are kept as
    computed; a vacuous bound is still a valid one.
    """

    epsilon: float
    rhs: float
    per_term: np.ndarray

    @property
    def expected_energy(self) -> float:
        """``E ||P_S (v - E v)||^2``, the numerator of the bound."""
        return float(self.per_term.sum())


def _vectors(basis) -> np.ndarray:
    return basis.vectors if isinstance(basis, SubspaceBasis) else np.asarray(basis, float)


def markov_rhs(eig: Eigensystem, basis, epsilon: float) -> MarkovBound:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    s = _vectors(basis)
    if s.ndim != 2 or s.shape[0] != eig.dim:
        raise DimensionError(f"basis vectors must have length {eig.dim}, got shape {s.shape}")
    r = eig.effective_rank
    lam = eig.eigenvalues[:r]
    overlaps = s.T @ eig.eigenvectors[:, :r]
    per_term = overlaps**2 * lam
    return MarkovBound(float(epsilon), float(per_term.sum()) / epsilon**2, per_term)


def tail_bound(eig: Eigensystem, m_a: int) -> float:
    """``sum_{r > m_a} lambda_r``; dominates the bound's numerator for any basis
    orthogonal to the top ``m_a`` modes."""
    if not 0 <= m_a <= eig.rank:
        raise DimensionError(f"M_A={m_a} outside [0, {eig.rank}]")
    return float(np.sum(eig.eigenvalues[m_a:]))


def exceedance_frequency(samples, mean, basis, epsilon: float) -> float:
    """Fraction of rows with ``||S^T (v - mean)||^2 >= epsilon^2``."""
    s = _vectors(basis)
    coeffs = (np.asarray(samples, float) - np.asarray(mean, float)) @ s
    return float(np.mean(np.sum(coeffs**2, axis=1) >= epsilon**2))
