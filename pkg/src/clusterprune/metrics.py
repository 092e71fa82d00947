"""Dataset balance and classifier evaluation metrics.

Balance is the Shannon entropy of the class histogram normalized by
log(c), so it is 1 exactly for a uniform dataset and independent of the
logarithm base. The class count c is the one declared by the label
vector, not the number of classes that survive a pruning, so prunings of
the same dataset share a normalizer. Zero-count classes contribute 0
(the p*log(p) -> 0 limit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, KeepList, LabelVector

PROB_FLOOR = 1e-12  # clamp before log: saturated probes must not yield -inf
ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class ClassHistogram:
    counts: np.ndarray  # per-class sample counts

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 1 or counts.size < 1:
            raise ContractError("histogram needs a non-empty 1-D count array")
        if np.any(counts < 0):
            raise ContractError("counts must be >= 0")
        if counts.sum() < 1:
            raise ContractError("histogram must count at least one sample")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram(labels: LabelVector, kl: KeepList | None = None) -> ClassHistogram:
    """Class counts over the kept samples (all samples if kl is None)."""
    ids = labels.class_ids
    if kl is not None:
        if kl.source_n != labels.n_samples:
            raise ContractError(
                f"keep-list indexes {kl.source_n} rows but labels have {labels.n_samples}"
            )
        ids = ids[kl.indices]
    return ClassHistogram(np.bincount(ids, minlength=labels.n_classes))


def balance(hist: ClassHistogram) -> float:
    """Normalized Shannon entropy of the class distribution, in [0, 1]."""
    c = hist.n_classes
    if c < 2:
        raise ContractError("balance is undefined for fewer than 2 classes (log c = 0)")
    p = hist.counts / hist.total
    nonzero = p[p > 0]
    entropy = -float(np.sum(nonzero * np.log(nonzero)))
    return min(1.0, max(0.0, entropy / np.log(c)))


def _check_probs(probs: np.ndarray, labels: LabelVector) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape != (labels.n_samples, labels.n_classes):
        raise ContractError(
            f"probability matrix shape {probs.shape} does not match "
            f"{labels.n_samples} samples x {labels.n_classes} classes"
        )
    row_sums = probs.sum(axis=1)
    worst = float(np.abs(row_sums - 1.0).max())
    if worst > ROW_SUM_TOL:
        raise ContractError(f"non-stochastic row: sum deviates from 1 by {worst:.3g}")
    return probs


def cross_entropy(probs: np.ndarray, labels: LabelVector) -> float:
    """Mean negative log-probability of the true class."""
    probs = _check_probs(probs, labels)
    true_p = probs[np.arange(labels.n_samples), labels.class_ids]
    return float(-np.mean(np.log(np.maximum(true_p, PROB_FLOOR))))


def accuracy(probs: np.ndarray, labels: LabelVector) -> float:
    """Fraction of rows whose argmax (lowest index on ties) is the true class."""
    probs = _check_probs(probs, labels)
    predicted = np.argmax(probs, axis=1)
    return float(np.mean(predicted == labels.class_ids))
