import hashlib
from pathlib import Path

import numpy as np
import pytest

from topiclab import ingest

DATA_DIR = Path(__file__).parent / "data"

# ---------------------------------------------------------------------------
# Acceptance reporting: one PASS/FAIL line per criterion after the run.
# ---------------------------------------------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_results):
        outcome = _acceptance_results[name]
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{tag}  {name}")


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def toy_bs():
    corpus = ingest.load_corpus(DATA_DIR / "toy_bs.jsonl", "bs")
    return ingest.segment_corpus(corpus)


@pytest.fixture(scope="session")
def toy_uc():
    corpus = ingest.load_corpus(DATA_DIR / "toy_uc.jsonl", "uc")
    return ingest.segment_corpus(corpus)


def synthetic_vectors(sentence_ids, dim=16):
    """Deterministic per-sentence embeddings (sha256-seeded), stable across
    processes so fixture files regenerate bit-identically."""
    rows = np.empty((len(sentence_ids), dim), dtype=np.float32)
    for i, sid in enumerate(sentence_ids):
        seed = int.from_bytes(hashlib.sha256(sid.encode()).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.normal(size=dim)
        rows[i] = (vec / np.linalg.norm(vec)).astype(np.float32)
    return rows
