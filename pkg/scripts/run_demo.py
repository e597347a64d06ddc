#!/usr/bin/env python3
"""End-to-end pipeline demo on the bundled toy corpus pair.

Ingests both corpora, builds synthetic embeddings, then runs every
subcommand through `topiclab.cli.main`, leaving all tables under --out.

Usage:
    python scripts/run_demo.py --out demo_out
"""

import argparse
import sys
from pathlib import Path

from topiclab.cli import main as cli
from topiclab.embeddings import write_embeddings_binary
from topiclab.ingest import read_sentences_jsonl

sys.path.insert(0, str(Path(__file__).parent))
from make_demo_embeddings import vectors_for  # noqa: E402

DATA = Path(__file__).parent.parent / "tests" / "data"


def run(argv):
    code = cli(argv)
    if code != 0:
        raise SystemExit(f"step failed ({code}): {' '.join(argv)}")
    print("ok:", " ".join(argv[:1] + argv[-2:]))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_out")
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--clusters", type=int, default=4)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = [
        "--corpus", str(DATA / "toy_bs.jsonl"), "--label", "bs",
        "--corpus", str(DATA / "toy_uc.jsonl"), "--label", "uc",
        "--out", str(out),
    ]

    run(["ingest", *base])
    emb = []
    for label in ("bs", "uc"):
        ids = [s.sentence_id
               for s in read_sentences_jsonl(out / f"{label}_sentences.jsonl")]
        path = out / f"{label}.cemb"
        write_embeddings_binary(path, vectors_for(ids, args.dim))
        emb.extend(["--embeddings", str(path)])

    cluster_flags = ["--clusters", str(args.clusters), "--seed", str(args.seed)]
    run(["stats", *base])
    run(["freq", *base])
    run(["compare-freq", *base])
    run(["cluster", *base, *emb, *cluster_flags])
    run(["keywords", *base, *emb, *cluster_flags])
    run(["eval", *base, *emb, *cluster_flags])
    run(["compare-models", *base])
    run(["report", *base])

    print(f"\nartifacts in {out}/:")
    for path in sorted(out.iterdir()):
        print(f"  {path.name}")


if __name__ == "__main__":
    main()
