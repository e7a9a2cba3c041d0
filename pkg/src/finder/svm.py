"""Binary soft-margin SVM trained by SMO on the dual problem.

Dual: minimise ``1/2 a^T Q a - sum(a)`` subject to ``0 <= a_i <= C`` and
``y^T a = 0`` with ``Q_ij = y_i y_j k(x_i, x_j)``. Each step updates the
maximal violating pair; training stops when the KKT gap ``m(a) - M(a)`` drops
below ``tol``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConvergenceError, DataError, DimensionError

TAU = 1e-12


@dataclass(frozen=True)
class Kernel:
    kind: str = "linear"
    gamma: Optional[float] = None

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if kind == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise ValueError("RBF gamma must be positive")

    def resolved(self, x: np.ndarray) -> "Kernel":
        """Fill in the default RBF width ``1 / (M * mean per-coordinate variance)``."""
        if self.kind != "rbf" or self.gamma is not None:
            return self
        return Kernel("rbf", default_gamma(x))

    def __call__(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return x @ z.T
        if self.gamma is None:
            raise ValueError("RBF kernel has no gamma; call resolved() first")
        return np.exp(-self.gamma * _sq_dist(x, z))


def _sq_dist(x: np.ndarray, z: np.ndarray, budget: int = 1 << 22) -> np.ndarray:
    # explicit differences (no |x|^2 + |z|^2 - 2xz cancellation), so d(x, x) == 0
    out = np.empty((x.shape[0], z.shape[0]))
    step = max(1, budget // max(1, z.shape[0] * x.shape[1]))
    for i in range(0, x.shape[0], step):
        d = x[i:i + step, None, :] - z[None, :, :]
        out[i:i + step] = np.einsum("ijk,ijk->ij", d, d)
    return out


def default_gamma(x: np.ndarray) -> float:
    x = np.asarray(x, float)
    total_var = float(np.sum(np.var(x, axis=0)))
    return 1.0 / total_var if total_var > 0 else 1.0


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    kernel: Kernel
    cost: float
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.support_vectors, self.dual_coefficients, np.array([self.bias, self.cost])):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        h.update(repr((self.kernel.kind, self.kernel.gamma)).encode())
        return h.hexdigest()


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("SVM training needs both classes present")
    return y


@njit(cache=True)
def _smo_loop(q, y, cost, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    yg = y.copy()  # -y * grad with grad = Q alpha - e
    up = y > 0
    low = y < 0
    it = 0
    while True:
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            if up[t] and yg[t] > gmax:
                gmax = yg[t]
                i = t
            if low[t] and yg[t] < gmin:
                gmin = yg[t]
                j = t
        gap = gmax - gmin
        if gap < tol:
            return alpha, yg, it, gap, True
        if it >= max_iter:
            return alpha, yg, it, gap, False
        it += 1
        ai = alpha[i]
        aj = alpha[j]
        gi = -y[i] * yg[i]
        gj = -y[j] * yg[j]
        if y[i] != y[j]:
            quad = max(q[i, i] + q[j, j] + 2.0 * q[i, j], TAU)
            delta = (-gi - gj) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            elif ai < 0:
                ai = 0.0
                aj = -diff
            if diff > 0:
                if ai > cost:
                    ai = cost
                    aj = cost - diff
            elif aj > cost:
                aj = cost
                ai = cost + diff
        else:
            quad = max(q[i, i] + q[j, j] - 2.0 * q[i, j], TAU)
            delta = (gi - gj) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > cost:
                if ai > cost:
                    ai = cost
                    aj = total - cost
            elif aj < 0:
                aj = 0.0
                ai = total
            if total > cost:
                if aj > cost:
                    aj = cost
                    ai = total - cost
            elif ai < 0:
                ai = 0.0
                aj = total
        di = ai - alpha[i]
        dj = aj - alpha[j]
        alpha[i] = ai
        alpha[j] = aj
        for t in range(n):
            yg[t] -= y[t] * (q[t, i] * di + q[t, j] * dj)
        for t in (i, j):
            up[t] = (y[t] > 0 and alpha[t] < cost) or (y[t] < 0 and alpha[t] > 0)
            low[t] = (y[t] < 0 and alpha[t] < cost) or (y[t] > 0 and alpha[t] > 0)


def smo(kmat: np.ndarray, y: np.ndarray, cost: float, tol: float, max_iter: int):
    """Run SMO on a precomputed kernel matrix; return (alpha, bias, n_iter)."""
    q = np.ascontiguousarray((y[:, None] * y[None, :]) * kmat)
    alpha, yg, it, gap, ok = _smo_loop(q, np.ascontiguousarray(y, dtype=float), float(cost),
                                       float(tol), int(max_iter))
    if not ok:
        raise ConvergenceError(f"SMO did not converge in {max_iter} iterations (KKT gap {gap:.3g})")
    up = ((y > 0) & (alpha < cost)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < cost)) | ((y > 0) & (alpha > 0))
    free = (alpha > 0) & (alpha < cost)
    if np.any(free):
        bias = float(np.mean(yg[free]))
    else:
        hi = np.max(yg[up]) if np.any(up) else np.min(yg[low])
        lo = np.min(yg[low]) if np.any(low) else np.max(yg[up])
        bias = float(0.5 * (hi + lo))
    return alpha, bias, it


def svm_train(features, labels, kernel: Kernel = Kernel(), cost: float = 1.0,
              tol: float = 1e-3, max_iter: Optional[int] = None) -> SvmModel:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise DimensionError("features must be an N x M matrix")
    y = _check_labels(labels)
    if y.shape[0] != x.shape[0]:
        raise DimensionError("features and labels disagree on N")
    if not cost > 0 or not tol > 0:
        raise ValueError("cost and tol must be positive")
    kernel = kernel.resolved(x)
    if max_iter is None:
        max_iter = max(100_000, 100 * x.shape[0])
    alpha, bias, it = smo(kernel(x, x), y, cost, tol, max_iter)
    sv = alpha > 0
    return SvmModel(x[sv].copy(), (alpha * y)[sv], bias, kernel, float(cost), it)


def svm_score(model: SvmModel, features) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.n_features and model.support_vectors.shape[0] > 0:
        raise DimensionError(f"model expects {model.n_features} features, got {x.shape[1]}")
    if model.support_vectors.shape[0] == 0:
        return np.full(x.shape[0], model.bias)
    return model.kernel(x, model.support_vectors) @ model.dual_coefficients + model.bias


def dual_objective(kmat, y, alpha) -> float:
    """Dual value ``sum(a) - 1/2 a^T Q a`` (to be maximised)."""
    y = np.asarray(y, float)
    a = np.asarray(alpha, float)
    q = (y[:, None] * y[None, :]) * np.asarray(kmat, float)
    return float(a.sum() - 0.5 * a @ q @ a)
