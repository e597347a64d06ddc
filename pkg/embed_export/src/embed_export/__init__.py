"""embed-export: sentence jsonl in, embedding file + manifest out."""

__version__ = "0.1.0"
