"""Residual eigenspace constructions and the resulting feature maps.

Every construction lives in the orthogonal complement of the span of the top
``M_A`` class-A modes. Four variants are provided:

* ``direct``  the whole complement,
* ``mls``     a multilevel (dyadic Haar) basis of the complement,
* ``aca-s``   complement directions of least class-B variance,
* ``aca-l``   complement directions of greatest class-B variance.

The MLS family is generated by recursively halving the feature index range
``[0, F)`` (a one-dimensional kd-tree); each split contributes one
piecewise-constant vector that is ``+`` on the left half and ``-`` on the right,
ordered coarse to fine. This is a concrete choice of the multilevel family;
other tree rules give other (equally valid) bases.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DataError, DimensionError
from .kle import Eigensystem

ORTHO_TOL = 1e-10
DEPENDENCE_TOL = 1e-8
TIE_DIGITS = 10


class Variant(str, Enum):
    DIRECT = "direct"
    MLS = "mls"
    ACA_S = "aca-s"
    ACA_L = "aca-l"
    COMPLEMENT = "complement"
    RAW = "raw"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown variant {value!r}")


@dataclass(frozen=True)
class SubspaceBasis:
    vectors: np.ndarray
    variant: Variant
    parent_dims: tuple = (0, 0)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


@dataclass(frozen=True)
class FeatureTransform:
    """``apply(v) = basis^T (v - class_a_mean)``."""

    class_a_mean: np.ndarray
    basis: SubspaceBasis
    objective: Optional[float] = None
    selected_eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def output_dim(self) -> int:
        return self.basis.dim

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.shape[1] != self.class_a_mean.shape[0]:
            raise DimensionError(
                f"transform expects {self.class_a_mean.shape[0]} features, got {x2.shape[1]}"
            )
        out = (x2 - self.class_a_mean) @ self.basis.vectors
        return out[0] if single else out

    def linear(self, x) -> np.ndarray:
        """The linear part only (no centring)."""
        return np.atleast_2d(np.asarray(x, float)) @ self.basis.vectors


def _top_modes(eig_a: Eigensystem, m_a: int) -> np.ndarray:
    f = eig_a.dim
    if m_a < 0:
        raise DimensionError("M_A must be non-negative")
    if m_a >= f:
        raise DimensionError(f"M_A={m_a} must be smaller than the feature count F={f}")
    if m_a > eig_a.effective_rank:
        raise DimensionError(f"M_A={m_a} exceeds the effective rank {eig_a.effective_rank} of class A")
    return eig_a.eigenvectors[:, :m_a]


def complement_basis(eig_a: Eigensystem, m_a: int) -> SubspaceBasis:
    """Orthonormal basis of the complement of the top ``m_a`` class-A modes.

    Uses a full SVD of the kept modes; its trailing left singular vectors span
    the complement. Result is ``F x (F - m_a)``.
    """
    phi = _top_modes(eig_a, m_a)
    f = eig_a.dim
    if m_a == 0:
        vecs = np.eye(f)
    else:
        u, _, _ = np.linalg.svd(phi, full_matrices=True)
        vecs = u[:, m_a:]
        # one projection sweep removes residual overlap with the kept modes
        vecs = vecs - phi @ (phi.T @ vecs)
        vecs, r = np.linalg.qr(vecs)
        vecs = vecs * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    return SubspaceBasis(vecs, Variant.COMPLEMENT, (m_a, f - m_a))


def direct_residual(eig_a: Eigensystem, m_a: int) -> FeatureTransform:
    comp = complement_basis(eig_a, m_a)
    basis = SubspaceBasis(comp.vectors, Variant.DIRECT, comp.parent_dims)
    return FeatureTransform(eig_a.mean, basis)


def _dyadic_splits(f: int):
    """Yield (left, mid, right) index triples level by level, coarse to fine."""
    level = [(0, f)]
    while level:
        nxt = []
        for a, b in level:
            if b - a < 2:
                continue
            mid = a + (b - a + 1) // 2
            yield a, mid, b
            nxt.append((a, mid))
            nxt.append((mid, b))
        level = nxt


def haar_family(f: int) -> np.ndarray:
    """Orthonormal dyadic Haar basis of R^f, columns ordered coarse to fine.

    Column 0 is the constant vector; then one vector per split of the index
    tree, ties within a level ordered by left endpoint.
    """
    if f < 1:
        raise DimensionError("F must be positive")
    cols = [np.full(f, 1.0 / np.sqrt(f))]
    for a, mid, b in _dyadic_splits(f):
        v = np.zeros(f)
        nl, nr = mid - a, b - mid
        v[a:mid] = 1.0 / nl
        v[mid:b] = -1.0 / nr
        cols.append(v / np.linalg.norm(v))
    return np.column_stack(cols)


def mls_basis(f: int, eig_a: Eigensystem, m_a: int, m_res: int) -> SubspaceBasis:
    """First ``m_res`` vectors of the multilevel basis of the class-A complement.

    Each Haar vector is orthogonalised (modified Gram-Schmidt, two passes)
    against the kept class-A modes and all previously accepted vectors;
    vectors whose residual norm falls below 1e-8 are dropped as dependent.
    """
    if f != eig_a.dim:
        raise DimensionError(f"F={f} does not match eigensystem dimension {eig_a.dim}")
    phi = _top_modes(eig_a, m_a)
    if m_res < 0 or m_res > f - m_a:
        raise DimensionError(f"M_res={m_res} must lie in [0, F - M_A] = [0, {f - m_a}]")
    accepted = []
    against = [phi[:, k] for k in range(m_a)]
    for j, h in enumerate(haar_family(f).T):
        if len(accepted) == m_res:
            break
        v = h.copy()
        for _ in range(2):
            for q in against:
                v -= (q @ v) * q
        nrm = np.linalg.norm(v)
        if nrm < DEPENDENCE_TOL:
            continue
        v /= nrm
        accepted.append(v)
        against.append(v)
    if len(accepted) < m_res:
        raise DataError(f"only {len(accepted)} independent MLS vectors obtainable, {m_res} requested")
    vecs = np.column_stack(accepted) if accepted else np.zeros((f, 0))
    return SubspaceBasis(vecs, Variant.MLS, (m_a, m_res))


def mls_residual(eig_a: Eigensystem, m_a: int, m_res: int) -> FeatureTransform:
    return FeatureTransform(eig_a.mean, mls_basis(eig_a.dim, eig_a, m_a, m_res))


def _select(values: np.ndarray, m: int, smallest: bool) -> np.ndarray:
    # Ties (equal to TIE_DIGITS relative digits) keep the stored order.
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    key = np.round(values / scale, TIE_DIGITS) if scale > 0 else np.zeros_like(values)
    order = np.argsort(key if smallest else -key, kind="stable")
    return order[:m]


def aca_subspace(eig_a: Eigensystem, cov_b, m_a: int, m_res: int, mode: str = "S") -> FeatureTransform:
    """Anomalous-class-adapted residual space.

    Restricts the class-B covariance to the class-A complement,
    ``G = V^T C_B V``, and keeps the ``m_res`` eigenvectors of ``G`` with the
    smallest (mode ``S``) or largest (mode ``L``) eigenvalues, mapped back as
    ``s_m = V t_m``. The attached ``objective`` is the sum of the selected
    eigenvalues, i.e. ``sum_m <s_m, C_B s_m>``.
    """
    mode = str(mode).upper()
    if mode not in ("S", "L"):
        raise ValueError(f"ACA mode must be 'S' or 'L', got {mode!r}")
    c = np.asarray(cov_b, dtype=float)
    f = eig_a.dim
    if c.shape != (f, f):
        raise DimensionError(f"class-B covariance has shape {c.shape}, expected ({f}, {f})")
    comp = complement_basis(eig_a, m_a)
    if m_res < 0 or m_res > comp.dim:
        raise DimensionError(f"M_res={m_res} must lie in [0, F - M_A] = [0, {comp.dim}]")
    v = comp.vectors
    g = v.T @ c @ v
    # eigh column order is the stored order used for tie-breaking
    lam, t = np.linalg.eigh(0.5 * (g + g.T))
    idx = _select(lam, m_res, smallest=(mode == "S"))
    s = v @ t[:, idx]
    variant = Variant.ACA_S if mode == "S" else Variant.ACA_L
    basis = SubspaceBasis(s, variant, (m_a, m_res))
    return FeatureTransform(eig_a.mean, basis, float(np.sum(lam[idx])), lam[idx])


def identity_transform(f: int, mean=None) -> FeatureTransform:
    """No-op map used for the raw-feature baseline."""
    mu = np.zeros(f) if mean is None else np.asarray(mean, float)
    return FeatureTransform(mu, SubspaceBasis(np.eye(f), Variant.RAW, (0, f)))


def build_transform(variant, eig_a: Eigensystem, m_a: int, m_res: int, cov_b=None) -> FeatureTransform:
    variant = Variant.parse(variant)
    if variant is Variant.DIRECT:
        return direct_residual(eig_a, m_a)
    if variant is Variant.MLS:
        return mls_residual(eig_a, m_a, m_res)
    if variant in (Variant.ACA_S, Variant.ACA_L):
        if cov_b is None:
            raise ValueError("ACA variants need the class-B covariance")
        return aca_subspace(eig_a, cov_b, m_a, m_res, "S" if variant is Variant.ACA_S else "L")
    if variant is Variant.RAW:
        return identity_transform(eig_a.dim)
    raise ValueError(f"variant {variant} does not define a feature transform")
