"""Directory-of-clips to embedding files.

Layout rule: every immediate subdirectory of the root is one class, its
name is the class name, and every ``*.wav`` inside it is one clip. Rows
are emitted in sorted (class, filename) order so repeated runs produce
byte-identical outputs. Clips that fail to decode are skipped with a
warning and recorded in ``<prefix>.skiplog``; a class whose clips all
fail aborts the extraction.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import load_clip
from .features import MfccParams, mfcc_stats, wav2vec2_mean_pool
from .formats import write_emb1, write_lbl1

FEATURE_KINDS = ("mfcc-stats", "wav2vec2-mean-pool")
DEFAULT_WAV2VEC2 = "facebook/wav2vec2-base"


@dataclass(frozen=True)
class AudioManifest:
    root: str
    features: str = "mfcc-stats"
    sample_rate: int = 16_000
    duration_s: float = 1.0
    mfcc: MfccParams = MfccParams()
    model_id: str = DEFAULT_WAV2VEC2

    def __post_init__(self):
        if self.features not in FEATURE_KINDS:
            raise ValueError(f"features must be one of {FEATURE_KINDS}")
        if self.sample_rate < 1 or self.duration_s <= 0:
            raise ValueError("sample_rate and duration_s must be positive")


def discover_clips(root) -> list[tuple[str, Path]]:
    """Sorted (class name, clip path) pairs under the class-per-subdirectory rule."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"{root} contains no class directories")
    clips = []
    for class_dir in class_dirs:
        wavs = sorted(p for p in class_dir.iterdir() if p.suffix.lower() == ".wav")
        if not wavs:
            raise ValueError(f"class directory {class_dir.name!r} has no .wav clips")
        clips.extend((class_dir.name, p) for p in wavs)
    return clips


def extract(manifest: AudioManifest, out_prefix: str) -> dict:
    """Write <prefix>.emb, <prefix>.lbl, <prefix>.lbl.names and <prefix>.skiplog.

    Returns a summary dict (rows, dims, classes, skipped).
    """
    clips = discover_clips(manifest.root)
    class_names = sorted({name for name, _ in clips})
    class_id = {name: i for i, name in enumerate(class_names)}

    rows: list[np.ndarray] = []
    ids: list[int] = []
    skipped: list[tuple[Path, str]] = []
    for name, path in clips:
        try:
            samples = load_clip(path, manifest.sample_rate, manifest.duration_s)
            if manifest.features == "mfcc-stats":
                row = mfcc_stats(samples, manifest.sample_rate, manifest.mfcc)
            else:
                row = wav2vec2_mean_pool(samples, manifest.sample_rate, manifest.model_id)
        except (ValueError, OSError) as exc:
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            skipped.append((path, str(exc)))
            continue
        if not np.all(np.isfinite(row)):
            print(f"warning: skipping {path}: non-finite features", file=sys.stderr)
            skipped.append((path, "non-finite features"))
            continue
        rows.append(row)
        ids.append(class_id[name])

    present = set(ids)
    missing = [name for name, i in class_id.items() if i not in present]
    if missing:
        raise ValueError(f"every clip of class(es) {missing} failed to extract")

    matrix = np.vstack(rows)
    write_emb1(matrix, f"{out_prefix}.emb")
    write_lbl1(np.asarray(ids), len(class_names), f"{out_prefix}.lbl", names=class_names)
    with open(f"{out_prefix}.skiplog", "w", encoding="utf-8") as f:
        for path, reason in skipped:
            f.write(f"{path}\t{reason}\n")
    return {
        "rows": matrix.shape[0],
        "dims": matrix.shape[1],
        "classes": len(class_names),
        "skipped": len(skipped),
    }
