"""Euclidean k-means: k-means++ seeding, Lloyd iterations, distance scores.

Reproducibility contract: restart j of a fit draws from a PCG64 stream
seeded with ``cfg.seed ^ j``. The assignment kernel and the centroid
update both work over fixed-size row blocks combined in block order, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import ContractError, EmbeddingMatrix, LabelVector
from .rng import make_rng

BLOCK_ROWS = 8192  # fixed: block layout must not depend on thread count


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iter: int = 300
    tol: float = 1e-6  # relative Frobenius centroid shift
    n_init: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ContractError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ContractError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ContractError(f"tol must be > 0, got {self.tol}")
        if self.n_init < 1:
            raise ContractError(f"n_init must be >= 1, got {self.n_init}")


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray  # k x D float64
    assignments: np.ndarray  # N cluster ids
    distances: np.ndarray  # N float64, Euclidean to assigned centroid
    inertia: float
    iterations_run: int
    converged: bool
    config: KMeansConfig
    inertia_histories: tuple[tuple[float, ...], ...]  # one per init, E-step costs
    best_init: int

    def __post_init__(self):
        for name in ("centroids", "assignments", "distances"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def inertia_history(self) -> tuple[float, ...]:
        return self.inertia_histories[self.best_init]

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _sq_distances_block(xb: np.ndarray, centroids: np.ndarray, x_norms: np.ndarray) -> np.ndarray:
    """Squared distances via ||x||^2 + ||c||^2 - 2 x.c, clamped at 0."""
    c_norms = np.einsum("ij,ij->i", centroids, centroids)
    d2 = x_norms[:, None] + c_norms[None, :] - 2.0 * (xb @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def assign(
    centroids: np.ndarray, X: EmbeddingMatrix | np.ndarray, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid id (ties to the lowest cluster index) and distance per row."""
    x64 = X.as_float64() if isinstance(X, EmbeddingMatrix) else np.asarray(X, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if x64.shape[1] != centroids.shape[1]:
        raise ContractError(
            f"matrix has {x64.shape[1]} dims but centroids have {centroids.shape[1]}"
        )
    n = x64.shape[0]
    assignments = np.empty(n, dtype=np.int64)
    distances = np.empty(n, dtype=np.float64)

    def work(start: int) -> None:
        stop = min(start + BLOCK_ROWS, n)
        xb = x64[start:stop]
        x_norms = np.einsum("ij,ij->i", xb, xb)
        d2 = _sq_distances_block(xb, centroids, x_norms)
        idx = np.argmin(d2, axis=1)
        assignments[start:stop] = idx
        distances[start:stop] = np.sqrt(d2[np.arange(stop - start), idx])

    starts = range(0, n, BLOCK_ROWS)
    if threads > 1 and n > BLOCK_ROWS:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for start in starts:
            work(start)
    return assignments, distances


def _update_centroids(
    x64: np.ndarray, assignments: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster means from per-block partial sums, combined in block order."""
    n, d = x64.shape
    sums = np.zeros((k, d))
    counts = np.zeros(k, dtype=np.int64)
    for start in range(0, n, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, n)
        ab = assignments[start:stop]
        onehot = np.zeros((stop - start, k))
        onehot[np.arange(stop - start), ab] = 1.0
        sums += onehot.T @ x64[start:stop]
        counts += np.bincount(ab, minlength=k)
    return sums, counts


def _repair_empty(
    centroids: np.ndarray, counts: np.ndarray, x64: np.ndarray
) -> np.ndarray:
    """Re-seed each empty cluster with the point farthest from its stale centroid."""
    for j in np.flatnonzero(counts == 0):
        diff = x64 - centroids[j]
        d2 = np.einsum("ij,ij->i", diff, diff)
        centroids[j] = x64[int(np.argmax(d2))]
    return centroids


def kmeans_plusplus(x64: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, then proportional to the
    squared distance to the nearest already-chosen centroid."""
    n = x64.shape[0]
    centroids = np.empty((k, x64.shape[1]))
    centroids[0] = x64[int(rng.integers(n))]
    if k == 1:
        return centroids
    diff = x64 - centroids[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            raise ContractError(
                f"cannot seed {k} clusters: only {i} distinct points available"
            )
        idx = int(rng.choice(n, p=d2 / total))
        centroids[i] = x64[idx]
        diff = x64 - centroids[i]
        np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)
    return centroids


def _lloyd(
    x64: np.ndarray, init_centroids: np.ndarray, cfg: KMeansConfig, threads: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, list[float], int, bool]:
    centroids = init_centroids.copy()
    history: list[float] = []
    converged = False
    iterations = 0
    for _ in range(cfg.max_iter):
        assignments, distances = assign(centroids, x64, threads)
        history.append(float(np.sum(distances * distances)))
        sums, counts = _update_centroids(x64, assignments, cfg.k)
        new_centroids = np.where(
            (counts > 0)[:, None], sums / np.maximum(counts, 1)[:, None], centroids
        )
        new_centroids = _repair_empty(new_centroids, counts, x64)
        shift = np.linalg.norm(new_centroids - centroids, "fro")
        shift /= max(1.0, np.linalg.norm(centroids, "fro"))
        centroids = new_centroids
        iterations += 1
        if shift < cfg.tol:
            converged = True
            break
    assignments, distances = assign(centroids, x64, threads)
    inertia = float(np.sum(distances * distances))
    history.append(inertia)
    return centroids, assignments, distances, inertia, history, iterations, converged


def kmeans_fit(X: EmbeddingMatrix, cfg: KMeansConfig, threads: int = 1) -> KMeansModel:
    """Best-of-n_init Lloyd fit; init j draws from seed ``cfg.seed ^ j``."""
    if cfg.k > X.n_samples:
        raise ContractError(f"k={cfg.k} exceeds n_samples={X.n_samples}")
    x64 = X.as_float64()
    best = None
    histories: list[tuple[float, ...]] = []
    best_init = 0
    for j in range(cfg.n_init):
        rng = make_rng(cfg.seed ^ j)
        init = kmeans_plusplus(x64, cfg.k, rng)
        result = _lloyd(x64, init, cfg, threads)
        histories.append(tuple(result[4]))
        if best is None or result[3] < best[3]:
            best = result
            best_init = j
    centroids, assignments, distances, inertia, _, iterations, converged = best
    counts = np.bincount(assignments, minlength=cfg.k)
    if np.any(counts == 0):
        raise ContractError(
            f"fit left {int(np.sum(counts == 0))} empty clusters; "
            f"k={cfg.k} likely exceeds the number of distinct points"
        )
    return KMeansModel(
        centroids=centroids,
        assignments=assignments,
        distances=distances,
        inertia=inertia,
        iterations_run=iterations,
        converged=converged,
        config=cfg,
        inertia_histories=tuple(histories),
        best_init=best_init,
    )


def sweep_k(
    X: EmbeddingMatrix, k_list: list[int], cfg: KMeansConfig, threads: int = 1
) -> list[tuple[int, float]]:
    """One fit per requested k (duplicates kept), same seed policy for each."""
    return [
        (k, kmeans_fit(X, replace(cfg, k=k), threads).inertia) for k in k_list
    ]


def assignments_as_labels(model: KMeansModel) -> LabelVector:
    """Cluster assignments packaged for LBL1 serialization (n_classes = k)."""
    return LabelVector(model.assignments.astype(np.uint32), model.k)


def save_kmeans(model: KMeansModel, prefix: str) -> None:
    """EMB1 centroids + LBL1 assignments + N x 1 EMB1 distances + text metadata."""
    from .core import write_embeddings, write_labels

    write_embeddings(EmbeddingMatrix(model.centroids), f"{prefix}.centroids.emb")
    write_labels(assignments_as_labels(model), f"{prefix}.assign.lbl")
    write_embeddings(
        EmbeddingMatrix(model.distances.reshape(-1, 1)), f"{prefix}.dist.emb"
    )
    cfg = model.config
    lines = [
        f"inertia = {model.inertia!r}",
        f"iterations_run = {model.iterations_run}",
        f"converged = {model.converged}",
        f"best_init = {model.best_init}",
        f"k = {cfg.k}",
        f"max_iter = {cfg.max_iter}",
        f"tol = {cfg.tol!r}",
        f"n_init = {cfg.n_init}",
        f"seed = {cfg.seed}",
    ]
    with open(f"{prefix}.meta", "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
