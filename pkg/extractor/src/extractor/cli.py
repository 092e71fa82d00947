"""CLI: extract --root DIR --features {wav2vec2,mfcc} --out PREFIX."""

from __future__ import annotations

import argparse
import sys

from .extraction import DEFAULT_WAV2VEC2, AudioManifest, extract
from .features import MfccParams

FEATURE_FLAGS = {"mfcc": "mfcc-stats", "wav2vec2": "wav2vec2-mean-pool"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Turn a directory of labeled audio clips into EMB1/LBL1 files.",
    )
    parser.add_argument("--root", required=True, help="class-per-subdirectory clip root")
    parser.add_argument("--features", choices=sorted(FEATURE_FLAGS), default="mfcc")
    parser.add_argument("--out", required=True, help="output prefix")
    parser.add_argument("--sample-rate", type=int, default=16_000)
    parser.add_argument("--duration", type=float, default=1.0, help="clip seconds")
    parser.add_argument("--n-mfcc", type=int, default=13)
    parser.add_argument("--model-id", default=DEFAULT_WAV2VEC2,
                        help="pretrained model for the wav2vec2 path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = AudioManifest(
        root=args.root,
        features=FEATURE_FLAGS[args.features],
        sample_rate=args.sample_rate,
        duration_s=args.duration,
        mfcc=MfccParams(n_mfcc=args.n_mfcc),
        model_id=args.model_id,
    )
    try:
        summary = extract(manifest, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"extract: {summary['rows']} rows x {summary['dims']} dims, "
        f"{summary['classes']} classes, {summary['skipped']} skipped -> {args.out}.emb/.lbl"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
