#!/usr/bin/env python3
"""Generate deterministic synthetic embeddings for a sentence jsonl file.

For driving the pipeline without a real sentence-embedding model: each
vector is seeded from the sentence id's sha256, so regeneration is
bit-identical. Real embeddings come from the embed-export tool.

Usage:
    python scripts/make_demo_embeddings.py sentences.jsonl out.cemb --dim 32
"""

import argparse
import hashlib

import numpy as np

from topiclab.embeddings import write_embeddings_binary
from topiclab.ingest import read_sentences_jsonl


def vectors_for(sentence_ids, dim):
    rows = np.empty((len(sentence_ids), dim), dtype=np.float32)
    for i, sid in enumerate(sentence_ids):
        seed = int.from_bytes(hashlib.sha256(sid.encode()).digest()[:8], "little")
        vec = np.random.default_rng(seed).normal(size=dim)
        rows[i] = (vec / np.linalg.norm(vec)).astype(np.float32)
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("sentences", help="sentence jsonl (from `topiclab ingest`)")
    parser.add_argument("output", help="CEMB output path")
    parser.add_argument("--dim", type=int, default=32)
    args = parser.parse_args()

    ids = [s.sentence_id for s in read_sentences_jsonl(args.sentences)]
    write_embeddings_binary(args.output, vectors_for(ids, args.dim))
    print(f"wrote {len(ids)} x {args.dim} float32 vectors to {args.output}")


if __name__ == "__main__":
    main()
