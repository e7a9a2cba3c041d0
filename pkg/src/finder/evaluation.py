"""Leave-pair-out cross-validation with Balanced / Unbalanced class-A splits.

Every (class-A row, class-B row) pair is held out once, giving ``N_A * N_B``
rounds. Within a round the remaining class-A rows are split into a part used
for the class-A covariance (``a_cov``) and a part used to train the SVM
(``a_svm``):

* Unbalanced: both parts are all remaining class-A rows.
* Balanced: ``a_svm`` is the first ``N_B - 1`` remaining rows (stored order),
  ``a_cov`` is everything else, i.e. ``N_A - N_B`` rows.

Class B is the positive class; all remaining class-B rows are used both for
the class-B covariance and for the SVM.
"""
from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import DataError, RoundError
from .kle import Dataset, empirical_covariance, empirical_mean, energy_truncation, estimate_eigensystem
from .subspace import Variant, build_transform, identity_transform
from .svm import Kernel, default_gamma, svm_score, svm_train


class Regime(str, Enum):
    BALANCED = "balanced"
    UNBALANCED = "unbalanced"

    @classmethod
    def parse(cls, value) -> "Regime":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True)
class ClassSplit:
    """One LPOCV round. Indices are positions within each class (0-based)."""

    a_cov: tuple
    a_svm: tuple
    b_train: tuple
    test_a: int
    test_b: int
    regime: Regime


def make_splits(n_a: int, n_b: int, regime, shuffle: bool = False, seed: int = 0) -> List[ClassSplit]:
    """All ``n_a * n_b`` leave-pair-out splits, test_a-major order.

    With ``shuffle`` the class-A order is permuted once (seeded) before the
    Balanced "first N_B - 1 rows" rule is applied.
    """
    regime = Regime.parse(regime)
    if n_a < 2:
        raise DataError(f"LPOCV needs n_a >= 2, got {n_a}")
    if n_b < 2:
        raise DataError(f"LPOCV needs n_b >= 2, got {n_b}")
    if regime is Regime.BALANCED and n_a < n_b + 1:
        raise DataError(f"Balanced regime needs n_a >= n_b + 1, got n_a={n_a}, n_b={n_b}")
    order_a = list(range(n_a))
    if shuffle:
        order_a = [int(i) for i in np.random.Generator(np.random.PCG64(seed)).permutation(n_a)]
    splits = []
    for ta in range(n_a):
        a_train = [i for i in order_a if i != ta]
        if regime is Regime.BALANCED:
            a_svm, a_cov = a_train[: n_b - 1], a_train[n_b - 1:]
        else:
            a_svm = a_cov = a_train
        for tb in range(n_b):
            b_train = tuple(j for j in range(n_b) if j != tb)
            splits.append(ClassSplit(tuple(a_cov), tuple(a_svm), b_train, ta, tb, regime))
    return splits


def auc(scores_a, scores_b) -> float:
    """Mann-Whitney AUC: share of (a, b) pairs with ``b > a``, ties count one half."""
    sa = np.sort(np.asarray(scores_a, float).ravel())
    sb = np.asarray(scores_b, float).ravel()
    if sa.size == 0 or sb.size == 0:
        raise ValueError("AUC needs non-empty score lists for both classes")
    below = np.searchsorted(sa, sb, side="left")
    upto = np.searchsorted(sa, sb, side="right")
    wins = 2 * int(below.sum()) + int((upto - below).sum())
    return wins / (2.0 * sa.size * sb.size)


def accuracy(scores_a, scores_b, threshold: float = 0.0) -> float:
    """Share of correct decisions: class A when ``score <= threshold``, else B."""
    sa = np.asarray(scores_a, float).ravel()
    sb = np.asarray(scores_b, float).ravel()
    if sa.size + sb.size == 0:
        raise ValueError("accuracy of no scores")
    correct = int(np.count_nonzero(sa <= threshold)) + int(np.count_nonzero(sb > threshold))
    return correct / (sa.size + sb.size)


@dataclass(frozen=True)
class PipelineConfig:
    variant: str = "aca-l"
    m_a: Union[int, float] = 5
    m_res: int = 5
    kernel: str = "rbf"
    cost: float = 1.0
    gamma: Optional[float] = None  # None = automatic width
    gamma_scale: float = 1.0
    regime: str = "unbalanced"
    seed: int = 0
    shuffle: bool = False
    tol: float = 1e-3
    threshold: float = 0.0
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant).value)
        object.__setattr__(self, "regime", Regime.parse(self.regime).value)
        Kernel(self.kernel, self.gamma)

    def echo(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RoundResult:
    split_index: int
    test_a: int
    test_b: int
    score_a: float
    score_b: float
    seconds: float
    model_digest: str
    m_a: int
    output_dim: int


@dataclass
class CvReport:
    per_round: List[RoundResult]
    auc: float
    accuracy: float
    mean_round_time: float
    pooled_auc: float
    config_echo: dict = field(default_factory=dict)

    @property
    def mean_round_ms(self) -> float:
        return 1000.0 * self.mean_round_time


def standardize(train: np.ndarray):
    """Per-feature z-score statistics from training rows; constant features keep divisor 1."""
    mu = train.mean(axis=0)
    sd = train.std(axis=0, ddof=1) if train.shape[0] > 1 else np.zeros(train.shape[1])
    sd = np.where(sd > 0, sd, 1.0)
    return mu, sd


def _resolve_m_a(m_a, eig) -> int:
    # floats in (0, 1] are energy fractions, everything else a fixed count
    if isinstance(m_a, float) and 0 < m_a <= 1:
        return energy_truncation(eig, m_a)
    return int(m_a)


def _digest(transform, model) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(transform.class_a_mean).tobytes())
    h.update(np.ascontiguousarray(transform.basis.vectors).tobytes())
    h.update(model.digest().encode())
    return h.hexdigest()


def run_round(xa: np.ndarray, xb: np.ndarray, split: ClassSplit, config: PipelineConfig,
              split_index: int = 0) -> RoundResult:
    """Train on one split and score its held-out pair."""
    a_cov = list(split.a_cov)
    a_svm = list(split.a_svm)
    b_tr = list(split.b_train)
    a_rows = sorted(set(a_cov) | set(a_svm))
    mu, sd = standardize(np.vstack([xa[a_rows], xb[b_tr]]))
    za = (xa - mu) / sd
    zb = (xb - mu) / sd

    start = time.perf_counter()
    variant = Variant.parse(config.variant)
    if variant is Variant.RAW:
        transform = identity_transform(xa.shape[1])
        m_a = 0
    else:
        if len(a_cov) < 2:
            raise DataError(f"class-A covariance needs >= 2 rows, split has {len(a_cov)}")
        mean_a = empirical_mean(za[a_cov])
        eig_a = estimate_eigensystem(za[a_cov] - mean_a, mean=mean_a)
        m_a = _resolve_m_a(config.m_a, eig_a)
        cov_b = None
        if variant in (Variant.ACA_S, Variant.ACA_L):
            cov_b = empirical_covariance(zb[b_tr], None)
        transform = build_transform(variant, eig_a, m_a, config.m_res, cov_b)
    feats = np.vstack([transform.apply(za[a_svm]), transform.apply(zb[b_tr])])
    labels = np.concatenate([-np.ones(len(a_svm)), np.ones(len(b_tr))])
    gamma = config.gamma
    if config.kernel == "rbf" and gamma is None:
        gamma = default_gamma(feats) * config.gamma_scale
    model = svm_train(feats, labels, Kernel(config.kernel, gamma), config.cost, config.tol)
    elapsed = time.perf_counter() - start

    test = transform.apply(np.vstack([za[split.test_a], zb[split.test_b]]))
    s_a, s_b = svm_score(model, test)
    return RoundResult(split_index, split.test_a, split.test_b, float(s_a), float(s_b),
                       elapsed, _digest(transform, model), m_a, transform.output_dim)


def _run_chunk(args):
    xa, xb, items, config = args
    out = []
    for idx, split in items:
        try:
            out.append(run_round(xa, xb, split, config, idx))
        except Exception as exc:  # reported with the split identity
            raise RoundError(split, exc) from exc
    return out


def class_rows(data: Dataset, positive_label=None):
    """Row indices of class A and class B (the positive label)."""
    if data.labels is None:
        raise DataError("LPOCV needs a labelled dataset")
    names, counts = np.unique(data.labels, return_counts=True)
    if names.size != 2:
        raise DataError(f"expected exactly two classes, found {names.size}: {list(names)}")
    if positive_label is None:
        # minority class is the anomalous one; ties go to the later label
        positive_label = names[1] if counts[1] <= counts[0] else names[0]
    positive_label = str(positive_label)
    if positive_label not in names:
        raise DataError(f"positive label {positive_label!r} not among labels {list(names)}")
    idx_b = np.flatnonzero(data.labels == positive_label)
    idx_a = np.flatnonzero(data.labels != positive_label)
    return idx_a, idx_b


def run_lpocv(data: Dataset, config: PipelineConfig, positive_label=None,
              order: Optional[Sequence[int]] = None) -> CvReport:
    """Full LPOCV; ``order`` optionally permutes the execution order of rounds."""
    if np.any(data.missing_mask):
        raise DataError("dataset has missing values; impute first")
    idx_a, idx_b = class_rows(data, positive_label)
    xa, xb = data.values[idx_a], data.values[idx_b]
    splits = make_splits(len(idx_a), len(idx_b), config.regime, config.shuffle, config.seed)
    items = list(enumerate(splits))
    if order is not None:
        items = [items[i] for i in order]
    if config.n_jobs > 1:
        chunks = [items[k::config.n_jobs] for k in range(config.n_jobs)]
        with ProcessPoolExecutor(config.n_jobs) as pool:
            parts = pool.map(_run_chunk, [(xa, xb, c, config) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = _run_chunk((xa, xb, items, config))
    results.sort(key=lambda r: r.split_index)
    return summarize(results, config)


def summarize(results: List[RoundResult], config: PipelineConfig) -> CvReport:
    sa = [r.score_a for r in results]
    sb = [r.score_b for r in results]
    paired = math.fsum(auc([r.score_a], [r.score_b]) for r in results) / len(results)
    return CvReport(
        per_round=results,
        auc=paired,
        accuracy=accuracy(sa, sb, config.threshold),
        mean_round_time=math.fsum(r.seconds for r in results) / len(results),
        pooled_auc=auc(sa, sb),
        config_echo=config.echo(),
    )


GRID_COSTS = (0.1, 1.0, 10.0)
GRID_GAMMA_SCALES = (0.5, 1.0, 2.0)


def grid_search(data: Dataset, config: PipelineConfig, positive_label=None,
                costs=GRID_COSTS, gamma_scales=GRID_GAMMA_SCALES):
    """LPOCV over a small (cost, gamma) grid; returns ``[(config, report), ...]``.

    Gamma scales multiply the automatic width and only apply to RBF kernels.
    """
    scales = gamma_scales if config.kernel == "rbf" and config.gamma is None else (1.0,)
    out = []
    for c in costs:
        for g in scales:
            cfg = replace(config, cost=float(c), gamma_scale=float(g))
            out.append((cfg, run_lpocv(data, cfg, positive_label)))
    return out
