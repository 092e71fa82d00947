"""Experiment manifest: one YAML document fully specifies a run.

Example::

    seed: 7
    inputs:
      train_embeddings: train.emb
      train_labels: train.lbl
      test_embeddings: test.emb
      test_labels: test.lbl
    pca:                     # optional section; omit to cluster raw embeddings
      components: 16         # or: variance_threshold: 0.8
    cluster:
      k: 10
      max_iter: 300
      tol: 1.0e-6
      n_init: 10
    prune:
      scope: global          # or per_cluster
      specs:
        - {method: simple, fraction: 0.4}
        - {method: hard, fraction: 0.4}
        - {method: random, fraction: 0.4}
    curve:
      n_grid: [250, 500, 1000, 2000, 4000, 8000]
      repeats: 10
    probe:
      epochs: 100
      batch_size: 128
      learning_rate: 0.1
      l2_penalty: 1.0e-4
    fit_window: [250, 8000]  # optional

Relative input paths resolve against the manifest's directory. The
identity keep-list is always evaluated in addition to the prune specs;
its curve doubles as the random-pruning baseline because the harness
subsamples the full set uniformly at every grid point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .core import ContractError

PRUNE_METHODS = frozenset({"simple", "hard", "random"})


@dataclass(frozen=True)
class RunManifest:
    train_embeddings: str
    train_labels: str
    test_embeddings: str
    test_labels: str
    seed: int = 0
    pca_components: int | None = None
    pca_variance_threshold: float | None = None
    k: int = 10
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6
    kmeans_n_init: int = 10
    prune_scope: str = "global"
    prune_specs: tuple[tuple[str, float], ...] = ()
    n_grid: tuple[int, ...] = ()
    repeats: int = 20
    probe_epochs: int = 100
    probe_batch_size: int = 128
    probe_learning_rate: float = 0.1
    probe_l2_penalty: float = 1e-4
    fit_window: tuple[float, float] | None = None
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ContractError(f"manifest: k must be >= 1, got {self.k}")
        if self.repeats < 1:
            raise ContractError(f"manifest: repeats must be >= 1, got {self.repeats}")
        if self.pca_components is not None and self.pca_variance_threshold is not None:
            raise ContractError("manifest: give pca components or variance_threshold, not both")
        if self.prune_scope not in ("global", "per_cluster"):
            raise ContractError(f"manifest: unknown prune scope {self.prune_scope!r}")
        for method, fraction in self.prune_specs:
            if method not in PRUNE_METHODS:
                raise ContractError(f"manifest: unknown prune method {method!r}")
            if not 0.0 <= fraction < 1.0:
                raise ContractError(
                    f"manifest: fraction must be in [0, 1), got {fraction}"
                )
        if not self.n_grid:
            raise ContractError("manifest: curve.n_grid must be non-empty")
        if any(n < 1 for n in self.n_grid):
            raise ContractError("manifest: n_grid entries must be >= 1")

    def strategies(self) -> list[str]:
        """Strategy labels in manifest order, identity first."""
        return ["identity"] + [f"{m}_{f:g}" for m, f in self.prune_specs]


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name) or {}
    if not isinstance(value, dict):
        raise ContractError(f"manifest: section {name!r} must be a mapping")
    return value


def load_manifest(path) -> RunManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        doc = yaml.safe_load(f)
    if not isinstance(doc, dict):
        raise ContractError(f"{path}: manifest must be a YAML mapping")
    base = path.parent

    inputs = _section(doc, "inputs")
    missing = {"train_embeddings", "train_labels", "test_embeddings", "test_labels"} - inputs.keys()
    if missing:
        raise ContractError(f"{path}: inputs section missing {sorted(missing)}")

    pca = _section(doc, "pca")
    cluster = _section(doc, "cluster")
    prune = _section(doc, "prune")
    curve = _section(doc, "curve")
    probe = _section(doc, "probe")

    specs = []
    for entry in prune.get("specs", []):
        specs.append((str(entry["method"]), float(entry["fraction"])))

    window = doc.get("fit_window")
    if window is not None:
        if len(window) != 2:
            raise ContractError(f"{path}: fit_window must be [N_min, N_max]")
        window = (float(window[0]), float(window[1]))

    return RunManifest(
        train_embeddings=str(base / inputs["train_embeddings"]),
        train_labels=str(base / inputs["train_labels"]),
        test_embeddings=str(base / inputs["test_embeddings"]),
        test_labels=str(base / inputs["test_labels"]),
        seed=int(doc.get("seed", 0)),
        pca_components=None if "components" not in pca else int(pca["components"]),
        pca_variance_threshold=(
            None if "variance_threshold" not in pca else float(pca["variance_threshold"])
        ),
        k=int(cluster.get("k", 10)),
        kmeans_max_iter=int(cluster.get("max_iter", 300)),
        kmeans_tol=float(cluster.get("tol", 1e-6)),
        kmeans_n_init=int(cluster.get("n_init", 10)),
        prune_scope=str(prune.get("scope", "global")),
        prune_specs=tuple(specs),
        n_grid=tuple(int(n) for n in curve.get("n_grid", [])),
        repeats=int(curve.get("repeats", 20)),
        probe_epochs=int(probe.get("epochs", 100)),
        probe_batch_size=int(probe.get("batch_size", 128)),
        probe_learning_rate=float(probe.get("learning_rate", 0.1)),
        probe_l2_penalty=float(probe.get("l2_penalty", 1e-4)),
        fit_window=window,
        raw=doc,
    )
