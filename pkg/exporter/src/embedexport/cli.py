"""Command line entry point.

Exit codes: 0 success, 2 bad arguments, 3 bad corpus data, 4 encoder load
failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .encoders import EncoderLoadError, load_encoder
from .exporter import CorpusError, export, read_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedexport",
        description="Export a text corpus to the patterngcd dataset format",
    )
    parser.add_argument("--in", dest="inp", required=True, help="corpus file (CSV or JSON lines)")
    parser.add_argument("--out", required=True, help="dataset file to write")
    parser.add_argument("--encoder", default="hash", help="hash[:DIM] or st:MODEL (default: hash)")
    parser.add_argument("--pool", choices=("cls", "mean"), default="cls",
                        help="first-token or mean pooling for transformer encoders")
    parser.add_argument("--known-classes", default=None,
                        help="comma-separated class ids; default: classes seen in the labeled split")
    parser.add_argument("--k", type=int, default=None,
                        help="total class count; default: max label + 1")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)

    known = None
    if args.known_classes is not None:
        try:
            known = [int(v) for v in args.known_classes.split(",") if v.strip() != ""]
        except ValueError:
            print(f"embedexport: bad --known-classes {args.known_classes!r}", file=sys.stderr)
            return 2
    if args.k is not None and args.k < 2:
        print(f"embedexport: --k must be >= 2, got {args.k}", file=sys.stderr)
        return 2

    try:
        encoder = load_encoder(args.encoder)
    except EncoderLoadError as exc:
        print(f"embedexport: {exc}", file=sys.stderr)
        return 4

    try:
        rows = read_corpus(args.inp)
        summary = export(rows, encoder, args.pool, args.out, k=args.k, known=known)
    except CorpusError as exc:
        print(f"embedexport: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"embedexport: {exc}", file=sys.stderr)
        return 3

    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
