"""corpus-embed command line entry point."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderUnavailable
from .export import CorpusError, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpus-embed",
        description="encode a labeled text corpus into id/label/embedding JSONL",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export")
    p.add_argument("--corpus", required=True, help="CSV or JSONL with id,text,label")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--encoder", default="hashing",
                   help="hashing | hashing:<dim> | hf:<model>")
    p.add_argument("--pooling", choices=("cls", "mean"), default="mean")
    p.add_argument("--replacement", default=None,
                   help="optional rewritten corpus keyed by the same ids")
    p.add_argument("--replacement-out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = export(
            args.corpus,
            args.encoder,
            args.pooling,
            args.out,
            replacement_corpus_path=args.replacement,
            replacement_out_path=args.replacement_out,
        )
    except CorpusError as exc:
        print(f"error: validation: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except EncoderUnavailable as exc:
        print(f"error: encoder: {' '.join(str(exc).split())}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: io: {' '.join(str(exc).split())}", file=sys.stderr)
        return 3
    print(
        f"wrote {report.out_path}: {report.rows_out} rows "
        f"(dim {report.feature_dim}, skipped {report.skipped} empty)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
