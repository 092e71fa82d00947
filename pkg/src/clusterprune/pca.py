"""Principal component analysis over embedding matrices.

The sample covariance (divisor N-1) is formed explicitly and
diagonalized with cyclic Jacobi rotations: slower than a packed LAPACK
call for very large D, but deterministic, accurate on symmetric
matrices, and free of backend-dependent behavior. Component signs are
fixed so the largest-magnitude coordinate of each component is positive
(ties resolved to the lowest index), making models platform-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError, EmbeddingMatrix, read_embeddings, write_embeddings

JACOBI_MAX_SWEEPS = 64
JACOBI_OFFDIAG_TOL = 1e-10  # relative to ||C||_F
EIGENVALUE_CLAMP = 1e-12  # relative to total variance


@dataclass(frozen=True)
class PcaModel:
    """Top-m eigenpairs of a sample covariance plus its total variance."""

    mean: np.ndarray  # D float64
    components: np.ndarray  # m x D float64, rows orthonormal
    eigenvalues: np.ndarray  # m float64, nonincreasing
    total_variance: float
    n_fit: int  # samples the model was fitted on

    def __post_init__(self):
        for name in ("mean", "components", "eigenvalues"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_dims(self) -> int:
        return self.components.shape[1]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.total_variance


def jacobi_eigh(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    unsorted. Sweeps until every off-diagonal is below 1e-10 * ||C||_F
    or 64 sweeps have run.
    """
    A = np.array(C, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return np.array([A[0, 0]]), V
    threshold = JACOBI_OFFDIAG_TOL * np.linalg.norm(A, "fro")
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.abs(A - np.diag(np.diag(A))).max()
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= threshold / n or apq == 0.0:
                    continue
                app, aqq = A[p, p], A[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                colp, colq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp, rowq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                # Closed forms for the rotated 2x2 block are numerically
                # cleaner than the double application above.
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0

                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for row in out:
        lead = int(np.argmax(np.abs(row)))
        if row[lead] < 0:
            row *= -1.0
    return out


def fit_pca(X: EmbeddingMatrix, m: int) -> PcaModel:
    """Fit the top-m principal components of X's sample covariance."""
    n, d = X.n_samples, X.n_dims
    if n < 2:
        raise ContractError(f"pca needs at least 2 samples, got {n}")
    max_m = min(n - 1, d)
    if not 1 <= m <= max_m:
        raise ContractError(f"m must be in [1, {max_m}] for shape {n}x{d}, got {m}")
    x64 = X.as_float64()
    mean = x64.mean(axis=0)
    centered = x64 - mean
    cov = centered.T @ centered / (n - 1)
    total_variance = float(np.trace(cov))
    scale = 1.0 + float(np.mean(x64 * x64))
    if total_variance <= 1e-24 * scale:
        raise ContractError("zero-variance dataset: all rows are identical")

    eigenvalues, vectors = jacobi_eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvalues[eigenvalues < EIGENVALUE_CLAMP * total_variance] = 0.0
    components = _fix_signs(vectors[:, order].T)

    return PcaModel(
        mean=mean,
        components=components[:m],
        eigenvalues=eigenvalues[:m],
        total_variance=total_variance,
        n_fit=n,
    )


def transform(model: PcaModel, X: EmbeddingMatrix) -> EmbeddingMatrix:
    """Project rows onto the principal components: row i -> components @ (x_i - mean)."""
    if X.n_dims != model.n_dims:
        raise ContractError(
            f"matrix has {X.n_dims} dims but model expects {model.n_dims}"
        )
    projected = (X.as_float64() - model.mean) @ model.components.T
    return EmbeddingMatrix(projected)


def components_for_variance(model: PcaModel, threshold: float) -> int:
    """Smallest component count whose cumulative variance ratio reaches `threshold`.

    The model must have been fitted with the full m = min(N-1, D) so the
    cumulative ratios cover the whole spectrum.
    """
    if not 0.0 < threshold <= 1.0:
        raise ContractError(f"threshold must be in (0, 1], got {threshold}")
    full_m = min(model.n_fit - 1, model.n_dims)
    if model.n_components != full_m:
        raise ContractError(
            f"model holds {model.n_components} components; a full model "
            f"({full_m}) is required to choose by variance"
        )
    cumulative = np.cumsum(model.explained_variance_ratio)
    hits = np.flatnonzero(cumulative >= threshold - 1e-12)
    if hits.size == 0:
        return model.n_components
    return int(hits[0]) + 1


def save_pca(model: PcaModel, prefix: str) -> None:
    """Write a model as an EMB1 pair (mean, components) plus text metadata.

    EMB1 payloads are float32, so a reloaded model carries float32
    precision on mean/components; eigenvalues and total_variance round-trip
    at full precision through the text file.
    """
    write_embeddings(EmbeddingMatrix(model.mean.reshape(1, -1)), f"{prefix}.mean.emb")
    write_embeddings(EmbeddingMatrix(model.components), f"{prefix}.components.emb")
    lines = [
        "eigenvalues = " + " ".join(repr(float(v)) for v in model.eigenvalues),
        f"total_variance = {model.total_variance!r}",
        f"n_fit = {model.n_fit}",
    ]
    with open(f"{prefix}.meta", "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_pca(prefix: str) -> PcaModel:
    mean = read_embeddings(f"{prefix}.mean.emb").as_float64()[0]
    components = read_embeddings(f"{prefix}.components.emb").as_float64()
    meta: dict[str, str] = {}
    with open(f"{prefix}.meta", "r", encoding="utf-8") as f:
        for line in f:
            if "=" in line:
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
    eigenvalues = np.array([float(tok) for tok in meta["eigenvalues"].split()])
    return PcaModel(
        mean=mean,
        components=components,
        eigenvalues=eigenvalues,
        total_variance=float(meta["total_variance"]),
        n_fit=int(meta["n_fit"]),
    )
