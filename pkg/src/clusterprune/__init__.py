"""Cluster-based dataset pruning in embedding space.

PCA, Euclidean k-means, distance-rank pruning (simple / hard / random),
class-balance measurement, linear-probe learning curves, and power-law
scaling-exponent extraction, plus a manifest-driven CLI tying the stages
together.
"""

__version__ = "0.1.0"

from .core import (
    ContractError,
    EmbeddingMatrix,
    FormatError,
    KeepList,
    LabelVector,
    gather,
    gather_labels,
    identity_keeplist,
    read_embeddings,
    read_keeplist,
    read_labels,
    write_embeddings,
    write_keeplist,
    write_labels,
)
from .kmeans import KMeansConfig, KMeansModel, assign, kmeans_fit, sweep_k
from .manifest import RunManifest, load_manifest
from .metrics import ClassHistogram, accuracy, balance, cross_entropy, histogram
from .pca import PcaModel, components_for_variance, fit_pca, transform
from .probe import (
    LearningCurve,
    ProbeConfig,
    ProbeModel,
    learning_curve,
    predict_probs,
    train_probe,
)
from .pruner import DistanceScores, prune_hard, prune_random, prune_simple, subsample
from .runner import run_experiment, verify_report
from .scaling import PowerLawFit, compare_fits, fit_power_law
from .synth import MixtureSpec, make_mixture
