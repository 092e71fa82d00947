"""Multinomial linear probe and the repeated-subsampling learning-curve harness.

The probe is a softmax classifier trained by plain mini-batch gradient
descent on L2-regularized cross-entropy. No momentum, no adaptive rates,
no early stopping: every knob is explicit and every run is a pure
function of (data, config).

Seed derivation in the harness is pinned: grid cell (N index i, repeat j)
subsamples with ``cfg.seed ^ splitmix64((i << 32) | j)`` and trains with
``splitmix64`` of that value, so cells are independent and a curve can be
reproduced cell by cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import ContractError, EmbeddingMatrix, KeepList, LabelVector, gather, gather_labels
from .metrics import accuracy, cross_entropy
from .pruner import subsample
from .rng import cell_seed, make_rng, splitmix64

CURVE_COLUMNS = ("N", "mean_loss", "std_loss", "mean_acc", "std_acc", "repeats")


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ContractError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0 or self.l2_penalty < 0:
            raise ContractError("learning_rate must be > 0 and l2_penalty >= 0")


@dataclass(frozen=True)
class ProbeModel:
    weights: np.ndarray  # c x D float64
    bias: np.ndarray  # c float64

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ContractError("probe parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    x64: np.ndarray,
    class_ids: np.ndarray,
    l2_penalty: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized cross-entropy over a batch with its analytic gradient.

    objective = mean CE + (l2/2) * sum(W^2); the L2 term excludes the bias.
    """
    n = x64.shape[0]
    probs = _softmax(x64 @ weights.T + bias)
    true_p = probs[np.arange(n), class_ids]
    loss = float(-np.mean(np.log(np.maximum(true_p, 1e-300))))
    loss += 0.5 * l2_penalty * float(np.sum(weights * weights))
    grad = probs
    grad[np.arange(n), class_ids] -= 1.0
    grad /= n
    d_weights = grad.T @ x64 + l2_penalty * weights
    d_bias = grad.sum(axis=0)
    return loss, d_weights, d_bias


def train_probe(X: EmbeddingMatrix, y: LabelVector, cfg: ProbeConfig) -> ProbeModel:
    """Final-epoch softmax probe; deterministic per cfg.seed."""
    if y.n_samples != X.n_samples:
        raise ContractError(
            f"labels cover {y.n_samples} samples but matrix has {X.n_samples}"
        )
    n, d = X.n_samples, X.n_dims
    c = y.n_classes
    if n < c:
        raise ContractError(f"need at least n_classes={c} samples, got {n}")
    x64 = X.as_float64()
    ids = y.class_ids.astype(np.int64)
    rng = make_rng(cfg.seed)
    weights = rng.uniform(-0.01, 0.01, size=(c, d))
    bias = np.zeros(c)
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            _, d_weights, d_bias = loss_and_gradient(
                weights, bias, x64[batch], ids[batch], cfg.l2_penalty
            )
            weights -= cfg.learning_rate * d_weights
            bias -= cfg.learning_rate * d_bias
    return ProbeModel(weights=weights, bias=bias)


def predict_probs(model: ProbeModel, X: EmbeddingMatrix) -> np.ndarray:
    """Row-stochastic N x c probability matrix (max-subtracted softmax)."""
    if X.n_dims != model.weights.shape[1]:
        raise ContractError(
            f"matrix has {X.n_dims} dims but probe expects {model.weights.shape[1]}"
        )
    return _softmax(X.as_float64() @ model.weights.T + model.bias)


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean_loss: float
    std_loss: float
    mean_acc: float
    std_acc: float
    repeats: int


@dataclass(frozen=True)
class LearningCurve:
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        ns = [p.n for p in self.points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ContractError("curve rows must have strictly increasing N")
        if any(p.std_loss < 0 or p.std_acc < 0 or p.repeats < 1 for p in self.points):
            raise ContractError("curve rows need std >= 0 and repeats >= 1")


def learning_curve(
    X: EmbeddingMatrix,
    y: LabelVector,
    kl: KeepList,
    test_X: EmbeddingMatrix,
    test_y: LabelVector,
    n_grid: list[int],
    repeats: int,
    cfg: ProbeConfig,
) -> LearningCurve:
    """Mean/std of test loss and accuracy at each training-set size.

    Each of the `repeats` cells at grid point N subsamples the keep-list
    to exactly N rows, trains a fresh probe, and evaluates on the fixed
    test set. Std is the population standard deviation.
    """
    if repeats < 1:
        raise ContractError("repeats must be >= 1")
    grid = sorted(int(n) for n in n_grid)
    if len(set(grid)) != len(grid):
        raise ContractError(f"n_grid has duplicate entries: {n_grid}")
    for n in grid:
        if n > kl.n_kept:
            raise ContractError(
                f"n_grid entry {n} exceeds keep-list size {kl.n_kept}"
            )
    points = []
    for i, n in enumerate(grid):
        losses = np.empty(repeats)
        accs = np.empty(repeats)
        for j in range(repeats):
            seed = cell_seed(cfg.seed, i, j)
            sub = subsample(kl, n, seed=seed)
            model = train_probe(
                gather(X, sub), gather_labels(y, sub), replace(cfg, seed=splitmix64(seed))
            )
            probs = predict_probs(model, test_X)
            losses[j] = cross_entropy(probs, test_y)
            accs[j] = accuracy(probs, test_y)
        points.append(
            CurvePoint(
                n=n,
                mean_loss=float(losses.mean()),
                std_loss=float(losses.std()),
                mean_acc=float(accs.mean()),
                std_acc=float(accs.std()),
                repeats=repeats,
            )
        )
    return LearningCurve(points=tuple(points))


def write_curve(curve: LearningCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CURVE_COLUMNS)
        for p in curve.points:
            writer.writerow(
                [p.n, repr(p.mean_loss), repr(p.std_loss), repr(p.mean_acc), repr(p.std_acc), p.repeats]
            )


def read_curve(path) -> LearningCurve:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != CURVE_COLUMNS:
            raise ContractError(f"{path}: expected curve header {','.join(CURVE_COLUMNS)}")
        points = tuple(
            CurvePoint(
                n=int(row[0]),
                mean_loss=float(row[1]),
                std_loss=float(row[2]),
                mean_acc=float(row[3]),
                std_acc=float(row[4]),
                repeats=int(row[5]),
            )
            for row in reader
        )
    return LearningCurve(points=points)
