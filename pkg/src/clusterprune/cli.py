"""Command-line interface: one subcommand per pipeline stage plus a
manifest-driven `run`.

Exit codes: 0 success, 1 runtime/contract error, 2 usage error. Errors
print a single machine-parsable line to stderr: ``error:<tag>: message``
with tag one of format, contract, io.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, metrics, pca, pruner, runner, scaling
from .core import (
    ContractError,
    FormatError,
    file_digest,
    read_embeddings,
    read_keeplist,
    read_labels,
    write_embeddings,
    write_keeplist,
    write_labels,
)
from .kmeans import KMeansConfig, kmeans_fit, save_kmeans
from .probe import ProbeConfig, learning_curve, read_curve, write_curve
from .synth import MixtureSpec, make_mixture


def _common(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--out", required=True, help=out_help)


def cmd_synth(args) -> int:
    spec = MixtureSpec(
        n_classes=args.classes,
        n_dims=args.dims,
        per_class=args.per_class,
        radius=args.radius,
        sigma=args.sigma,
        seed=args.seed,
        means_seed=args.means_seed,
    )
    X, y = make_mixture(spec)
    write_embeddings(X, f"{args.out}.emb")
    write_labels(y, f"{args.out}.lbl")
    print(f"synth: wrote {X.n_samples}x{X.n_dims} embeddings, {y.n_classes} classes -> {args.out}.emb/.lbl")
    return 0


def cmd_pca(args) -> int:
    X = read_embeddings(args.embeddings)
    if (args.components is None) == (args.variance_threshold is None):
        raise ContractError("give exactly one of --components / --variance-threshold")
    if args.variance_threshold is not None:
        full = pca.fit_pca(X, min(X.n_samples - 1, X.n_dims))
        m = pca.components_for_variance(full, args.variance_threshold)
    else:
        m = args.components
    model = pca.fit_pca(X, m)
    pca.save_pca(model, args.out)
    projected = pca.transform(model, X)
    write_embeddings(projected, f"{args.out}.proj.emb")
    kept = float(np.sum(model.explained_variance_ratio))
    print(f"pca: {m} components explain {kept:.4f} of variance -> {args.out}.proj.emb")
    return 0


def cmd_cluster(args) -> int:
    X = read_embeddings(args.embeddings)
    cfg = KMeansConfig(
        k=args.k, max_iter=args.max_iter, tol=args.tol, n_init=args.n_init, seed=args.seed
    )
    model = kmeans_fit(X, cfg, threads=args.threads)
    save_kmeans(model, args.out)
    print(
        f"cluster: k={args.k} inertia={model.inertia:.6g} "
        f"iterations={model.iterations_run} converged={model.converged}"
    )
    return 0


def cmd_prune(args) -> int:
    dist_matrix = read_embeddings(args.scores)
    if dist_matrix.n_dims != 1:
        raise ContractError(f"scores file must be N x 1, got {dist_matrix.n_dims} columns")
    distance = dist_matrix.as_float64()[:, 0]
    digest = file_digest(args.scores)
    if args.method in ("simple", "hard"):
        if args.scope == "per_cluster":
            if args.clusters is None:
                raise ContractError("per_cluster scope needs --clusters assign.lbl")
            cluster = read_labels(args.clusters).class_ids
        else:
            cluster = np.zeros(distance.size, dtype=np.int64)
        scores = pruner.DistanceScores(distance=distance, cluster=cluster)
        fn = pruner.prune_simple if args.method == "simple" else pruner.prune_hard
        kl = fn(scores, args.fraction, args.scope, digest)
    else:
        kl = pruner.prune_random(distance.size, args.fraction, args.seed, digest)
    write_keeplist(kl, args.out)
    summary = f"prune: method={args.method} fraction={args.fraction:g} kept={kl.n_kept}/{kl.source_n}"
    if args.labels:
        labels = read_labels(args.labels)
        before = metrics.balance(metrics.histogram(labels))
        after = metrics.balance(metrics.histogram(labels, kl))
        summary += f" balance={before:.3f}->{after:.3f}"
    print(summary)
    return 0


def cmd_balance(args) -> int:
    labels = read_labels(args.labels)
    kl = read_keeplist(args.keep) if args.keep else None
    print(f"{metrics.balance(metrics.histogram(labels, kl)):.3f}")
    return 0


def cmd_train(args) -> int:
    X = read_embeddings(args.embeddings)
    y = read_labels(args.labels)
    kl = read_keeplist(args.keep)
    test_X = read_embeddings(args.test_embeddings)
    test_y = read_labels(args.test_labels)
    n_grid = [int(tok) for tok in args.n_grid.split(",")]
    cfg = ProbeConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l2_penalty=args.l2_penalty,
        seed=args.seed,
    )
    curve = learning_curve(X, y, kl, test_X, test_y, n_grid, args.repeats, cfg)
    write_curve(curve, args.out)
    last = curve.points[-1]
    print(
        f"train: {len(curve.points)} grid points x {args.repeats} repeats; "
        f"at N={last.n}: loss={last.mean_loss:.4f} acc={last.mean_acc:.4f}"
    )
    return 0


def cmd_scale_fit(args) -> int:
    window = None
    if args.window:
        lo, _, hi = args.window.partition(":")
        window = (float(lo), float(hi))
    fits = {}
    for path in args.curves:
        name = Path(path).stem
        if name == "curve":  # run layout: <strategy>/curve.csv
            name = Path(path).parent.name
        fits[name] = scaling.fit_from_curve(read_curve(path), window)
    ranked = scaling.compare_fits(fits)
    scaling.write_fit_summary(ranked, args.out)
    print(scaling.format_fit_table(ranked))
    return 0


def cmd_run(args) -> int:
    report = runner.run_experiment(args.manifest, args.out, threads=args.threads)
    print(f"run: wrote {len(report['artifacts'])} artifacts under {args.out}")
    for row in report["fits"]:
        print(
            f"  {row['strategy']:<20} nu={row['nu']:.3f} "
            f"stderr={row['stderr']:.4f} r2={row['r2']:.4f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clusterprune",
        description="Cluster-based dataset pruning and scaling analysis on embedded datasets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled Gaussian-mixture dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--means-seed", type=int, default=None,
                   help="separate seed for class means (share it across train/test)")
    _common(p, "output prefix (writes PREFIX.emb and PREFIX.lbl)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pca", help="fit principal components and project")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--variance-threshold", type=float, default=None)
    _common(p, "output prefix (model files + PREFIX.proj.emb)")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("cluster", help="k-means fit with distance scores")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--n-init", type=int, default=10)
    _common(p, "output prefix (.centroids.emb/.assign.lbl/.dist.emb/.meta)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("prune", help="build a keep-list from distance scores")
    p.add_argument("--scores", required=True, help="N x 1 EMB1 distance file")
    p.add_argument("--method", required=True, choices=["simple", "hard", "random"])
    p.add_argument("--fraction", type=float, required=True, help="fraction removed")
    p.add_argument("--scope", choices=["global", "per_cluster"], default="global")
    p.add_argument("--clusters", default=None, help="LBL1 assignments (per_cluster scope)")
    p.add_argument("--labels", default=None, help="print balance before/after when given")
    _common(p, "keep-list output path")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("balance", help="normalized class-entropy of a (pruned) dataset")
    p.add_argument("--labels", required=True)
    p.add_argument("--keep", default=None)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train", help="learning curve for one keep-list")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--keep", required=True)
    p.add_argument("--test-embeddings", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--n-grid", required=True, help="comma-separated training sizes")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--l2-penalty", type=float, default=1e-4)
    _common(p, "learning-curve CSV output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("scale-fit", help="power-law exponents from learning-curve CSVs")
    p.add_argument("curves", nargs="+", help="learning-curve CSV paths")
    p.add_argument("--window", default=None, help="N_MIN:N_MAX fit window")
    _common(p, "fit-summary CSV output path")
    p.set_defaults(func=cmd_scale_fit)

    p = sub.add_parser("run", help="execute a full manifest-driven experiment")
    p.add_argument("manifest", help="YAML manifest path")
    _common(p, "output directory")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error:format: {exc}", file=sys.stderr)
    except ContractError as exc:
        print(f"error:contract: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
