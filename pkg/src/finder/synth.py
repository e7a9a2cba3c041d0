"""Synthetic random fields with a prescribed Karhunen-Loeve structure.

Samples are ``mean + sum_r sqrt(lambda_r) y_r phi_r`` with the coefficients
``y_r`` drawn independently from a zero-mean, unit-variance law. Randomness
comes from ``numpy.random.Generator(PCG64(seed))``; draw order is fixed
(an ``n x R`` block, row-major) so a seed reproduces the same samples on any
platform with the same NumPy bit generator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionError
from .kle import Dataset

LAWS = ("gaussian", "rademacher", "uniform")


def _draw(rng: np.random.Generator, law: str, shape) -> np.ndarray:
    if law == "gaussian":
        return rng.standard_normal(shape)
    if law == "rademacher":
        return 2.0 * rng.integers(0, 2, size=shape) - 1.0
    if law == "uniform":
        # uniform on [-sqrt(3), sqrt(3)] has unit variance
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)
    raise ValueError(f"unknown coefficient law {law!r}; expected one of {LAWS}")


@dataclass(frozen=True)
class SynthSpec:
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    coefficient_law: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, float)
        lam = np.asarray(self.eigenvalues, float).reshape(-1)
        vecs = np.asarray(self.eigenvectors, float).reshape(mean.shape[0], lam.shape[0])
        if np.any(lam < 0):
            raise ValueError("eigenvalues must be non-negative")
        if lam.size and np.max(np.abs(vecs.T @ vecs - np.eye(lam.size))) > 1e-10:
            raise ValueError("eigenvectors must be orthonormal")
        if self.coefficient_law not in LAWS:
            raise ValueError(f"unknown coefficient law {self.coefficient_law!r}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def covariance(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    def to_config(self) -> dict:
        """Flat ``key -> str`` mapping; eigenvector rows are separated by ';'."""
        fmt = lambda a: ",".join(repr(float(v)) for v in a)
        return {
            "mean": fmt(self.mean),
            "eigenvalues": fmt(self.eigenvalues),
            "eigenvectors": ";".join(fmt(row) for row in self.eigenvectors),
            "coefficient_law": self.coefficient_law,
            "seed": str(int(self.seed)),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SynthSpec":
        parse = lambda s: np.array([float(t) for t in s.split(",") if t.strip()])
        mean = parse(cfg["mean"])
        lam = parse(cfg.get("eigenvalues", ""))
        rows = [r for r in cfg.get("eigenvectors", "").split(";") if r.strip()]
        vecs = np.array([parse(r) for r in rows]) if lam.size else np.zeros((mean.size, 0))
        return cls(mean, lam, vecs, cfg.get("coefficient_law", "gaussian").strip(), int(cfg.get("seed", 0)))


def sample(spec: SynthSpec, n: int, seed=None) -> Dataset:
    """Draw ``n`` realisations; ``seed`` overrides ``spec.seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.Generator(np.random.PCG64(spec.seed if seed is None else seed))
    r = spec.eigenvalues.shape[0]
    coeffs = _draw(rng, spec.coefficient_law, (n, r))
    values = spec.mean + (coeffs * np.sqrt(spec.eigenvalues)) @ spec.eigenvectors.T
    return Dataset(values)


def two_class_scenario(f: int, shared_mean, a_spectrum, b_spectrum, overlap_dims: int,
                       seed: int = 0, law: str = "gaussian",
                       noise: float = 0.0,
                       rotation_seed: Optional[int] = None) -> Tuple[SynthSpec, SynthSpec]:
    """Two classes with a common mean and different spectral support.

    Class A lives on coordinates ``0 .. R_A-1``. Class B reuses the first
    ``overlap_dims`` of those directions and puts the rest of its spectrum on
    the coordinates directly after A's block, orthogonal to A's span.

    ``noise > 0`` adds variance ``noise`` on every coordinate a class does not
    already use, making both covariances full rank. ``rotation_seed`` applies
    one Haar-random orthogonal matrix to both eigenbases, so per-feature
    standardisation no longer lines up with the spectral axes.
    """
    lam_a = np.asarray(a_spectrum, float)
    lam_b = np.asarray(b_spectrum, float)
    ra, rb = lam_a.size, lam_b.size
    if overlap_dims < 0 or overlap_dims > min(ra, rb):
        raise DimensionError(f"overlap_dims={overlap_dims} must lie in [0, min(R_A, R_B)]")
    if ra > f or ra + (rb - overlap_dims) > f:
        raise DimensionError(f"spectra need {ra + rb - overlap_dims} dimensions, F={f}")
    mean = np.zeros(f) if shared_mean is None else np.asarray(shared_mean, float)
    if mean.shape != (f,):
        raise DimensionError("shared_mean must have length F")
    eye = np.eye(f)
    phi_a = eye[:, :ra]
    phi_b = np.column_stack([eye[:, :overlap_dims], eye[:, ra:ra + rb - overlap_dims]]) if rb else eye[:, :0]
    if noise < 0:
        raise ValueError("noise must be non-negative")
    if noise > 0:
        lam_a, phi_a = _pad_noise(lam_a, phi_a, noise)
        lam_b, phi_b = _pad_noise(lam_b, phi_b, noise)
    if rotation_seed is not None:
        rot = random_orthogonal(f, rotation_seed)
        phi_a, phi_b = rot @ phi_a, rot @ phi_b
    spec_a = SynthSpec(mean, lam_a, phi_a, law, seed)
    spec_b = SynthSpec(mean, lam_b, phi_b, law, seed + 1)
    return spec_a, spec_b


def random_orthogonal(f: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R-diagonal signs fixed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    q, r = np.linalg.qr(rng.standard_normal((f, f)))
    return q * np.sign(np.diag(r))


def _pad_noise(lam, phi, noise):
    used = np.any(phi != 0, axis=1)
    free = np.eye(phi.shape[0])[:, ~used]
    return np.concatenate([lam, np.full(free.shape[1], noise)]), np.column_stack([phi, free])


def scenario_dataset(spec_a: SynthSpec, spec_b: SynthSpec, n_a: int, n_b: int,
                     label_a: str = "A", label_b: str = "B") -> Dataset:
    """Stack ``n_a`` class-A rows over ``n_b`` class-B rows, labelled."""
    xa = sample(spec_a, n_a).values
    xb = sample(spec_b, n_b).values
    labels = np.array([label_a] * n_a + [label_b] * n_b)
    return Dataset(np.vstack([xa, xb]), labels)
