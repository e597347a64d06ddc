"""Run manifests: inputs, content hashes, resolved config, versions, timings.

Input hashes make fixture drift detectable; wall-clock fields are excluded
from determinism comparisons by consumers.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from pathlib import Path
from typing import Sequence

import numpy

from . import __version__

VOLATILE_KEYS = ("timings", "created_at")


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config_dict: dict) -> str:
    canonical = json.dumps(config_dict, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_manifest(
    command: str,
    config_dict: dict,
    inputs: Sequence[str | Path],
    outputs: Sequence[str | Path],
    started: float,
) -> dict:
    return {
        "command": command,
        "config": config_dict,
        "config_hash": config_hash(config_dict),
        "inputs": [
            {"path": str(p), "sha256": file_sha256(p)}
            for p in inputs if Path(p).is_file()
        ],
        "outputs": [str(p) for p in outputs],
        "versions": {
            "topiclab": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
        },
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "timings": {"elapsed_seconds": time.perf_counter() - started},
    }


def write_manifest(path: str | Path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def stable_view(manifest: dict) -> dict:
    """Manifest minus wall-clock fields, for determinism checks."""
    return {k: v for k, v in manifest.items() if k not in VOLATILE_KEYS}
