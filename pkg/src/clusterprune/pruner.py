"""Turn per-sample distance scores into keep-lists.

Simple pruning drops the samples closest to their centroid, hard pruning
the farthest. Fractions always mean "fraction removed". Tie-breaking is
fully pinned so keep-lists are platform-stable: simple removes the
lower index first, hard the higher, which makes the two methods exact
complements at matching fractions whenever all scores are distinct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, KeepList, round_half_even
from .rng import make_rng


@dataclass(frozen=True)
class DistanceScores:
    """Euclidean distance to the assigned centroid, per sample."""

    distance: np.ndarray  # N float64, finite, >= 0
    cluster: np.ndarray  # N cluster ids

    def __post_init__(self):
        dist = np.array(self.distance, dtype=np.float64, copy=True)
        clus = np.array(self.cluster, dtype=np.int64, copy=True)
        if dist.ndim != 1 or dist.size < 1:
            raise ContractError("distance scores must be a non-empty 1-D array")
        if dist.shape != clus.shape:
            raise ContractError(
                f"distance/cluster length mismatch: {dist.shape} vs {clus.shape}"
            )
        if not np.all(np.isfinite(dist)) or np.any(dist < 0):
            raise ContractError("distances must be finite and >= 0")
        dist.setflags(write=False)
        clus.setflags(write=False)
        object.__setattr__(self, "distance", dist)
        object.__setattr__(self, "cluster", clus)

    @property
    def n_samples(self) -> int:
        return self.distance.size


def scores_from_kmeans(model) -> DistanceScores:
    return DistanceScores(distance=model.distances, cluster=model.assignments)


def _check_fraction(fraction: float, n: int) -> int:
    if not 0.0 <= fraction < 1.0:
        raise ContractError(f"fraction must be in [0, 1), got {fraction}")
    r = round_half_even(fraction * n)
    if r >= n:
        raise ContractError(
            f"removing round({fraction} * {n}) = {r} samples would empty the dataset"
        )
    return r


def _rank_prune(
    scores: DistanceScores, fraction: float, scope: str, remove_high: bool
) -> np.ndarray:
    """Kept indices after removing ranked samples.

    The ascending stable order sorts by (distance, index); simple removes
    its head, hard its tail (so hard's ties shed the higher index first).
    """
    n = scores.n_samples
    if scope == "global":
        r = _check_fraction(fraction, n)
        order = np.argsort(scores.distance, kind="stable")
        kept = order[r:] if not remove_high else order[: n - r]
    elif scope == "per_cluster":
        _check_fraction(fraction, n)
        kept_parts = []
        for c in np.unique(scores.cluster):
            members = np.flatnonzero(scores.cluster == c)
            order = members[np.argsort(scores.distance[members], kind="stable")]
            r_c = round_half_even(fraction * members.size)
            kept_parts.append(order[r_c:] if not remove_high else order[: members.size - r_c])
        kept = np.concatenate(kept_parts)
        if kept.size == 0:
            raise ContractError("per-cluster pruning removed every sample")
    else:
        raise ContractError(f"unknown scope {scope!r}")
    return np.sort(kept)


def prune_simple(
    scores: DistanceScores,
    fraction: float,
    scope: str = "global",
    parent_digest: str = "",
) -> KeepList:
    """Remove the `fraction` of samples with the smallest distances."""
    kept = _rank_prune(scores, fraction, scope, remove_high=False)
    return KeepList(
        indices=kept,
        source_n=scores.n_samples,
        method="simple",
        fraction_removed=fraction,
        parent_digest=parent_digest,
        scope=scope,
    )


def prune_hard(
    scores: DistanceScores,
    fraction: float,
    scope: str = "global",
    parent_digest: str = "",
) -> KeepList:
    """Remove the `fraction` of samples with the largest distances."""
    kept = _rank_prune(scores, fraction, scope, remove_high=True)
    return KeepList(
        indices=kept,
        source_n=scores.n_samples,
        method="hard",
        fraction_removed=fraction,
        parent_digest=parent_digest,
        scope=scope,
    )


def prune_random(
    n: int, fraction: float, seed: int, parent_digest: str = ""
) -> KeepList:
    """Uniform sample without replacement of the post-pruning size."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    r = _check_fraction(fraction, n)
    rng = make_rng(seed)
    kept = np.sort(rng.choice(n, size=n - r, replace=False))
    return KeepList(
        indices=kept.astype(np.int64),
        source_n=n,
        method="random",
        fraction_removed=fraction,
        seed=seed,
        parent_digest=parent_digest,
    )


def subsample(kl: KeepList, target_n: int, seed: int) -> KeepList:
    """Uniform subset of an existing keep-list, used to hit an exact N."""
    if not 1 <= target_n <= kl.n_kept:
        raise ContractError(
            f"target_n must be in [1, {kl.n_kept}], got {target_n}"
        )
    rng = make_rng(seed)
    picked = rng.choice(kl.n_kept, size=target_n, replace=False)
    return KeepList(
        indices=np.sort(kl.indices[picked]),
        source_n=kl.source_n,
        method="subsample",
        fraction_removed=1.0 - target_n / kl.source_n,
        seed=seed,
        parent_digest=kl.parent_digest,
    )
