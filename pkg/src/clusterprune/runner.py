"""Manifest-driven experiment: the full prune-then-scale protocol.

Pipeline: optional PCA -> k-means -> keep-lists (identity plus each
prune spec) -> balance table -> learning curves -> power-law fits.
Everything lands under one output directory::

    out/
      pca.*            (when enabled)
      kmeans.*
      <strategy>/keep.keep
      <strategy>/curve.csv
      balance.csv
      fits.csv
      report.json

The run is a pure function of (input files, manifest): artifact digests
are recorded in the report, and a rerun with the same inputs reproduces
them byte for byte. Stage wall-clock times are recorded too and are the
one report section excluded from determinism comparisons.

Stage seeds derive from the manifest seed: k-means uses
``derive_seed(seed, "kmeans")``, a random prune spec uses
``derive_seed(seed, "prune:<strategy>")``, and each strategy's curve uses
``derive_seed(seed, "curve:<strategy>")``.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

from . import metrics, pca, pruner, scaling
from .core import (
    ContractError,
    file_digest,
    identity_keeplist,
    read_embeddings,
    read_keeplist,
    read_labels,
    write_keeplist,
)
from .kmeans import KMeansConfig, kmeans_fit, save_kmeans
from .manifest import RunManifest, load_manifest
from .probe import ProbeConfig, learning_curve, write_curve
from .rng import derive_seed

BALANCE_COLUMNS = ("strategy", "balance", "n_kept", "source_n")


class _StageClock:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._name = None
        self._start = 0.0

    def start(self, name: str):
        self._name = name
        self._start = time.perf_counter()

    def stop(self):
        self.timings[self._name] = time.perf_counter() - self._start


def _run_stage(clock: _StageClock, name: str):
    class _Ctx:
        def __enter__(self):
            clock.start(name)

        def __exit__(self, exc_type, exc, tb):
            clock.stop()
            if isinstance(exc, (ContractError, OSError)):
                raise ContractError(f"stage {name}: {exc}") from exc
            return False

    return _Ctx()


def _probe_config(manifest: RunManifest, seed: int) -> ProbeConfig:
    return ProbeConfig(
        epochs=manifest.probe_epochs,
        batch_size=manifest.probe_batch_size,
        learning_rate=manifest.probe_learning_rate,
        l2_penalty=manifest.probe_l2_penalty,
        seed=seed,
    )


def run_experiment(manifest_path, out_dir, threads: int = 1) -> dict:
    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clock = _StageClock()
    artifacts: dict[str, str] = {}

    def record(path: Path) -> str:
        digest = file_digest(path)
        artifacts[str(path.relative_to(out))] = digest
        return digest

    with _run_stage(clock, "load"):
        train_X = read_embeddings(manifest.train_embeddings)
        train_y = read_labels(manifest.train_labels)
        test_X = read_embeddings(manifest.test_embeddings)
        test_y = read_labels(manifest.test_labels)
        if train_y.n_samples != train_X.n_samples or test_y.n_samples != test_X.n_samples:
            raise ContractError("labels and embeddings disagree on sample count")
        train_digest = file_digest(manifest.train_embeddings)

    if manifest.pca_components is not None or manifest.pca_variance_threshold is not None:
        with _run_stage(clock, "pca"):
            if manifest.pca_variance_threshold is not None:
                full = pca.fit_pca(train_X, min(train_X.n_samples - 1, train_X.n_dims))
                m = pca.components_for_variance(full, manifest.pca_variance_threshold)
            else:
                m = manifest.pca_components
            model = pca.fit_pca(train_X, m)
            pca.save_pca(model, str(out / "pca"))
            for suffix in ("mean.emb", "components.emb", "meta"):
                record(out / f"pca.{suffix}")
            train_X = pca.transform(model, train_X)
            test_X = pca.transform(model, test_X)

    with _run_stage(clock, "cluster"):
        cfg = KMeansConfig(
            k=manifest.k,
            max_iter=manifest.kmeans_max_iter,
            tol=manifest.kmeans_tol,
            n_init=manifest.kmeans_n_init,
            seed=derive_seed(manifest.seed, "kmeans"),
        )
        model = kmeans_fit(train_X, cfg, threads=threads)
        save_kmeans(model, str(out / "kmeans"))
        for suffix in ("centroids.emb", "assign.lbl", "dist.emb", "meta"):
            record(out / f"kmeans.{suffix}")
        scores_digest = artifacts["kmeans.dist.emb"]
        # Score the written files, not the in-memory model, so `run` and the
        # stage-by-stage CLI produce identical keep-lists.
        dist = read_embeddings(out / "kmeans.dist.emb").as_float64()[:, 0]
        clusters = read_labels(out / "kmeans.assign.lbl").class_ids
        scores = pruner.DistanceScores(distance=dist, cluster=clusters)

    with _run_stage(clock, "prune"):
        keeplists: dict[str, object] = {
            "identity": identity_keeplist(train_X.n_samples, parent_digest=train_digest)
        }
        for method, fraction in manifest.prune_specs:
            label = f"{method}_{fraction:g}"
            if method == "simple":
                kl = pruner.prune_simple(scores, fraction, manifest.prune_scope, scores_digest)
            elif method == "hard":
                kl = pruner.prune_hard(scores, fraction, manifest.prune_scope, scores_digest)
            else:
                kl = pruner.prune_random(
                    train_X.n_samples,
                    fraction,
                    seed=derive_seed(manifest.seed, f"prune:{label}"),
                    parent_digest=train_digest,
                )
            keeplists[label] = kl
        keep_digests = {}
        for label, kl in keeplists.items():
            (out / label).mkdir(exist_ok=True)
            keep_path = out / label / "keep.keep"
            write_keeplist(kl, keep_path)
            keep_digests[label] = record(keep_path)

    with _run_stage(clock, "balance"):
        balance_rows = []
        for label, kl in keeplists.items():
            value = metrics.balance(metrics.histogram(train_y, kl))
            balance_rows.append((label, value, kl.n_kept, kl.source_n))
        with open(out / "balance.csv", "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(BALANCE_COLUMNS)
            for label, value, n_kept, source_n in balance_rows:
                writer.writerow([label, repr(value), n_kept, source_n])
        record(out / "balance.csv")

    with _run_stage(clock, "curves"):
        for label, kl in keeplists.items():
            for n in manifest.n_grid:
                if n > kl.n_kept:
                    raise ContractError(
                        f"n_grid entry {n} exceeds pruned size {kl.n_kept} "
                        f"for strategy {label}"
                    )
        curves = {}
        for label, kl in keeplists.items():
            cfg = _probe_config(manifest, derive_seed(manifest.seed, f"curve:{label}"))
            curve = learning_curve(
                train_X, train_y, kl, test_X, test_y,
                list(manifest.n_grid), manifest.repeats, cfg,
            )
            curve_path = out / label / "curve.csv"
            write_curve(curve, curve_path)
            record(curve_path)
            curves[label] = curve

    with _run_stage(clock, "fits"):
        fits = {
            label: scaling.fit_from_curve(curve, manifest.fit_window)
            for label, curve in curves.items()
        }
        ranked = scaling.compare_fits(fits)
        scaling.write_fit_summary(ranked, out / "fits.csv")
        record(out / "fits.csv")

    report = {
        "manifest": manifest.raw,
        "keep_digests": keep_digests,
        "balance": [
            {"strategy": label, "balance": value, "n_kept": n_kept, "source_n": source_n}
            for label, value, n_kept, source_n in balance_rows
        ],
        "curves": {label: f"{label}/curve.csv" for label in keeplists},
        "fits": [
            {
                "strategy": label,
                "nu": fit.nu,
                "stderr": fit.stderr_nu,
                "r2": fit.r_squared,
                "n_used": fit.n_used,
            }
            for label, fit in ranked.rows
        ],
        "artifacts": artifacts,
        "timings_s": {k: round(v, 6) for k, v in clock.timings.items()},
    }
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return report


def verify_report(out_dir) -> None:
    """Recheck that every artifact the report references exists and matches
    its recorded digest."""
    out = Path(out_dir)
    with open(out / "report.json", "r", encoding="utf-8") as f:
        report = json.load(f)
    for rel, digest in report["artifacts"].items():
        path = out / rel
        if not path.exists():
            raise ContractError(f"report references missing file {rel}")
        actual = file_digest(path)
        if actual != digest:
            raise ContractError(
                f"digest mismatch for {rel}: recorded {digest[:12]}, found {actual[:12]}"
            )
    for label in report["curves"].values():
        if not (out / label).exists():
            raise ContractError(f"report references missing curve {label}")
    # keep-lists must still parse and re-validate
    for label in report["keep_digests"]:
        read_keeplist(out / label / "keep.keep")
