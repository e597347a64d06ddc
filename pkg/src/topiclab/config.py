"""Pipeline configuration: YAML file plus command-line overrides.

Unknown keys are errors, not warnings, so a typo like ``embedding_modle``
can never silently fall back to a default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .ingest import SegmentationConfig
from .lexstats import TokenizerConfig
from ._stopwords import ENGLISH_STOPWORDS
from .topics import ClusterParams

OUTPUT_DIR_ENV = "TOPICLAB_OUT"


@dataclass(frozen=True)
class CorpusSpec:
    path: str
    label: str
    format: str = "jsonl"
    embeddings: str | None = None
    assignment: str | None = None
    coords: str | None = None


@dataclass(frozen=True)
class MetricOptions:
    rank: int = 20
    rank_mode: str = "single_rank"
    puv_k: int = 10
    ngram_top_m: int = 500
    keywords_k: int = 10


@dataclass(frozen=True)
class SweepSpec:
    k_clusters: tuple[int, ...] = ()
    noise_thresholds: tuple[float, ...] = ()
    seeds: tuple[int, ...] = ()


@dataclass(frozen=True)
class PipelineConfig:
    corpora: tuple[CorpusSpec, ...] = ()
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    cluster: ClusterParams | None = None
    sweep: SweepSpec | None = None
    metrics: MetricOptions = field(default_factory=MetricOptions)
    output_dir: str = "out"
    compare_k: int = 20


_CORPUS_KEYS = {"path", "label", "format", "embeddings", "assignment", "coords"}
_TOKENIZER_KEYS = {"lowercase", "strip_punctuation", "stopwords", "min_token_chars"}
_SEGMENTATION_KEYS = {"min_tokens", "max_tokens", "abbreviations"}
_CLUSTER_KEYS = {"method", "k_clusters", "noise_threshold", "seed", "max_iters"}
_SWEEP_KEYS = {"k_clusters", "noise_thresholds", "seeds"}
_METRIC_KEYS = {"rank", "rank_mode", "puv_k", "ngram_top_m", "keywords_k"}
_TOP_KEYS = {"corpora", "tokenizer", "segmentation", "cluster", "sweep",
             "metrics", "output_dir", "compare_k"}


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {context}")


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a pipeline config file."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_dict(data, context=str(path))


def config_from_dict(data: dict, context: str = "config") -> PipelineConfig:
    _check_keys(data, _TOP_KEYS, context)

    corpora = []
    for i, item in enumerate(data.get("corpora", [])):
        if not isinstance(item, dict):
            raise ConfigError(f"{context}: corpora[{i}] must be a mapping")
        _check_keys(item, _CORPUS_KEYS, f"{context}: corpora[{i}]")
        if "path" not in item or "label" not in item:
            raise ConfigError(f"{context}: corpora[{i}] needs 'path' and 'label'")
        corpora.append(CorpusSpec(**item))

    tok_data = dict(data.get("tokenizer", {}))
    _check_keys(tok_data, _TOKENIZER_KEYS, f"{context}: tokenizer")
    stopwords = tok_data.pop("stopwords", "default")
    if stopwords == "default":
        stopwords = ENGLISH_STOPWORDS
    elif stopwords in (None, "none"):
        stopwords = frozenset()
    elif isinstance(stopwords, list):
        stopwords = frozenset(str(w) for w in stopwords)
    else:
        raise ConfigError(f"{context}: tokenizer.stopwords must be "
                          "'default', 'none', or a list of words")
    tokenizer = TokenizerConfig(stopwords=stopwords, **tok_data)

    seg_data = dict(data.get("segmentation", {}))
    _check_keys(seg_data, _SEGMENTATION_KEYS, f"{context}: segmentation")
    if "abbreviations" in seg_data:
        seg_data["abbreviations"] = frozenset(seg_data["abbreviations"])
    segmentation = SegmentationConfig(**seg_data)

    cluster = None
    if "cluster" in data and data["cluster"] is not None:
        cluster_data = dict(data["cluster"])
        _check_keys(cluster_data, _CLUSTER_KEYS, f"{context}: cluster")
        cluster = ClusterParams(**cluster_data)

    sweep = None
    if "sweep" in data and data["sweep"] is not None:
        sweep_data = dict(data["sweep"])
        _check_keys(sweep_data, _SWEEP_KEYS, f"{context}: sweep")
        sweep = SweepSpec(
            k_clusters=tuple(int(k) for k in sweep_data.get("k_clusters", ())),
            noise_thresholds=tuple(float(t) for t in sweep_data.get("noise_thresholds", ())),
            seeds=tuple(int(s) for s in sweep_data.get("seeds", ())),
        )

    metric_data = dict(data.get("metrics", {}))
    _check_keys(metric_data, _METRIC_KEYS, f"{context}: metrics")
    metrics = MetricOptions(**metric_data)

    return PipelineConfig(
        corpora=tuple(corpora),
        tokenizer=tokenizer,
        segmentation=segmentation,
        cluster=cluster,
        sweep=sweep,
        metrics=metrics,
        output_dir=str(data.get("output_dir",
                                os.environ.get(OUTPUT_DIR_ENV, "out"))),
        compare_k=int(data.get("compare_k", 20)),
    )


def apply_overrides(config: PipelineConfig, args) -> PipelineConfig:
    """Fold parsed CLI flags over the file config (flags win)."""
    if getattr(args, "corpus", None):
        labels = getattr(args, "label", None) or []
        if len(labels) != len(args.corpus):
            raise ConfigError("each --corpus needs a matching --label")
        formats = getattr(args, "format", None) or []
        corpora = []
        for i, path in enumerate(args.corpus):
            fmt = formats[i] if i < len(formats) else "jsonl"
            corpora.append(CorpusSpec(path=path, label=labels[i], format=fmt))
        config = replace(config, corpora=tuple(corpora))
    if getattr(args, "embeddings", None):
        if len(config.corpora) != len(args.embeddings):
            raise ConfigError("--embeddings count must match corpora")
        config = replace(config, corpora=tuple(
            replace(spec, embeddings=path)
            for spec, path in zip(config.corpora, args.embeddings)
        ))
    if getattr(args, "assignment", None):
        if len(config.corpora) != len(args.assignment):
            raise ConfigError("--assignment count must match corpora")
        config = replace(config, corpora=tuple(
            replace(spec, assignment=path)
            for spec, path in zip(config.corpora, args.assignment)
        ))
    if getattr(args, "out", None):
        config = replace(config, output_dir=args.out)
    if getattr(args, "k", None) is not None:
        config = replace(config, compare_k=args.k)

    metrics = config.metrics
    for attr in ("rank", "rank_mode", "puv_k", "ngram_top_m", "keywords_k"):
        value = getattr(args, attr, None)
        if value is not None:
            metrics = replace(metrics, **{attr: value})
    config = replace(config, metrics=metrics)

    cluster_overrides = {}
    for flag, attr in (("clusters", "k_clusters"),
                       ("noise_threshold", "noise_threshold"),
                       ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            cluster_overrides[attr] = value
    if cluster_overrides:
        base = config.cluster or ClusterParams()
        config = replace(config, cluster=replace(base, **cluster_overrides))
    return config


def config_as_dict(config: PipelineConfig) -> dict:
    """JSON-friendly echo of the fully-resolved config (for the manifest)."""
    return {
        "corpora": [
            {"path": c.path, "label": c.label, "format": c.format,
             "embeddings": c.embeddings, "assignment": c.assignment,
             "coords": c.coords}
            for c in config.corpora
        ],
        "tokenizer": {
            "lowercase": config.tokenizer.lowercase,
            "strip_punctuation": config.tokenizer.strip_punctuation,
            "min_token_chars": config.tokenizer.min_token_chars,
            "stopword_count": len(config.tokenizer.stopwords),
        },
        "segmentation": {
            "min_tokens": config.segmentation.min_tokens,
            "max_tokens": config.segmentation.max_tokens,
            "abbreviations": sorted(config.segmentation.abbreviations),
        },
        "cluster": None if config.cluster is None else {
            "method": config.cluster.method,
            "k_clusters": config.cluster.k_clusters,
            "noise_threshold": config.cluster.noise_threshold,
            "seed": config.cluster.seed,
            "max_iters": config.cluster.max_iters,
        },
        "sweep": None if config.sweep is None else {
            "k_clusters": list(config.sweep.k_clusters),
            "noise_thresholds": list(config.sweep.noise_thresholds),
            "seeds": list(config.sweep.seeds),
        },
        "metrics": {
            "rank": config.metrics.rank,
            "rank_mode": config.metrics.rank_mode,
            "puv_k": config.metrics.puv_k,
            "ngram_top_m": config.metrics.ngram_top_m,
            "keywords_k": config.metrics.keywords_k,
        },
        "output_dir": config.output_dir,
        "compare_k": config.compare_k,
    }
