"""Command line for the exporter."""

from __future__ import annotations

import argparse
import sys

from .exporter import ExportError, ExportJob, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode a sentence jsonl file into an embedding file.",
    )
    parser.add_argument("input", help="sentence jsonl (sentence_id + text per line)")
    parser.add_argument("output", help="embedding file to write")
    parser.add_argument("--model", default="all-mpnet-base-v2",
                        help="sentence-transformers model id, or debug-hash-<dim>")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--format", choices=["binary", "jsonl"], default="binary")
    parser.add_argument("--no-normalize", action="store_true",
                        help="keep raw model vectors instead of unit rows")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        input_path=args.input,
        output_path=args.output,
        model=args.model,
        batch_size=args.batch_size,
        output_format=args.format,
        normalize=not args.no_normalize,
    )
    try:
        manifest = export_embeddings(job)
    except ExportError as exc:
        print(f"embed-export: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {manifest['count']} x {manifest['dimension']} vectors "
          f"({manifest['format']}) to {manifest['output']}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
