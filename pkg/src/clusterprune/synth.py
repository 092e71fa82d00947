"""Synthetic labeled Gaussian mixtures for desk-scale pipeline runs.

Class means are drawn on a sphere of radius `radius` from `means_seed`,
within-class noise is isotropic with spread `sigma` from `seed`. Keeping
the two seeds separate lets a train and a test set share the exact same
class means while drawing independent samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, EmbeddingMatrix, LabelVector
from .rng import derive_seed, make_rng


@dataclass(frozen=True)
class MixtureSpec:
    n_classes: int
    n_dims: int
    per_class: int
    radius: float = 10.0
    sigma: float = 1.0
    seed: int = 0
    means_seed: int | None = None  # defaults to seed

    def __post_init__(self):
        if self.n_classes < 1 or self.n_dims < 1 or self.per_class < 1:
            raise ContractError("n_classes, n_dims and per_class must all be >= 1")
        if self.radius <= 0 or self.sigma < 0:
            raise ContractError("radius must be > 0 and sigma >= 0")


def class_means(spec: MixtureSpec) -> np.ndarray:
    rng = make_rng(spec.seed if spec.means_seed is None else spec.means_seed)
    means = rng.standard_normal((spec.n_classes, spec.n_dims))
    norms = np.linalg.norm(means, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ContractError("degenerate zero-norm class mean draw")
    return means / norms * spec.radius


def make_mixture(spec: MixtureSpec) -> tuple[EmbeddingMatrix, LabelVector]:
    """Class-blocked rows: all of class 0 first, then class 1, and so on."""
    means = class_means(spec)
    noise_rng = make_rng(derive_seed(spec.seed, "mixture-noise"))
    rows = np.repeat(means, spec.per_class, axis=0)
    if spec.sigma > 0:
        rows = rows + spec.sigma * noise_rng.standard_normal(rows.shape)
    ids = np.repeat(np.arange(spec.n_classes, dtype=np.uint32), spec.per_class)
    names = tuple(f"class_{i:02d}" for i in range(spec.n_classes))
    return EmbeddingMatrix(rows), LabelVector(ids, spec.n_classes, names)
