"""Command-line surface: orchestrates the pipeline and emits every table.

Exit codes: 0 success, 1 usage error, 2 data error. Re-running a subcommand
with identical inputs and config produces byte-identical CSV files; run
manifests record content hashes so fixture drift is detectable.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from . import compare as cmp
from . import config as cfg
from . import evalmetrics as ev
from . import ingest
from . import lexstats as lex
from . import manifest as mf
from . import topics
from .embeddings import load_embeddings
from .errors import ConfigError, TopiclabError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="topiclab",
                     description="Corpus comparison and topic-model evaluation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="pipeline config file (YAML)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--corpus", action="append",
                       help="corpus path (repeat per corpus; pairs with --label)")
        p.add_argument("--label", action="append", help="corpus label")
        p.add_argument("--format", action="append", choices=["jsonl", "plain_dir"],
                       help="corpus format (default jsonl)")
        return p

    common(sub.add_parser("ingest", help="segment corpora into sentence jsonl"))
    common(sub.add_parser("stats", help="sentence-level corpus statistics"))

    p = common(sub.add_parser("freq", help="n-gram frequency tables"))
    p.add_argument("--ngram", choices=["1", "2", "both"], default="both")

    p = common(sub.add_parser("compare-freq", help="top-k shared-term comparison"))
    p.add_argument("--k", type=int, help="number of top terms (default 20)")
    p.add_argument("--sort-by", choices=["a_count", "b_count"], default="b_count")

    p = common(sub.add_parser("cluster", help="assign sentences to topics"))
    p.add_argument("--embeddings", action="append", help="embedding file per corpus")
    p.add_argument("--clusters", type=int, help="number of clusters")
    p.add_argument("--noise-threshold", dest="noise_threshold", type=float)
    p.add_argument("--seed", type=int, help="clustering seed")

    p = common(sub.add_parser("keywords", help="class-based TF-IDF keywords per topic"))
    p.add_argument("--embeddings", action="append")
    p.add_argument("--assignment", action="append", help="assignment CSV per corpus")
    p.add_argument("--keywords-k", dest="keywords_k", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--noise-threshold", dest="noise_threshold", type=float)
    p.add_argument("--seed", type=int)

    p = common(sub.add_parser("eval", help="five-metric model evaluation"))
    p.add_argument("--embeddings", action="append")
    p.add_argument("--assignment", action="append")
    p.add_argument("--rank", type=int)
    p.add_argument("--rank-mode", dest="rank_mode",
                   choices=["single_rank", "cumulative"])
    p.add_argument("--puv-k", dest="puv_k", type=int)
    p.add_argument("--ngram-top-m", dest="ngram_top_m", type=int)
    p.add_argument("--keywords-k", dest="keywords_k", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--noise-threshold", dest="noise_threshold", type=float)
    p.add_argument("--seed", type=int)

    p = common(sub.add_parser("sweep", help="run a parameter grid and summarize"))
    p.add_argument("--embeddings", action="append")
    p.add_argument("--rank", type=int)
    p.add_argument("--rank-mode", dest="rank_mode",
                   choices=["single_rank", "cumulative"])
    p.add_argument("--puv-k", dest="puv_k", type=int)
    p.add_argument("--ngram-top-m", dest="ngram_top_m", type=int)
    p.add_argument("--keywords-k", dest="keywords_k", type=int)

    common(sub.add_parser("compare-models", help="cross-model keyword overlap"))
    common(sub.add_parser("report", help="side-by-side comparison bundle"))
    return parser


def _resolve_config(args) -> cfg.PipelineConfig:
    if args.config:
        config = cfg.load_config(args.config)
    else:
        config = cfg.config_from_dict({})
    return cfg.apply_overrides(config, args)


def _out_dir(config: cfg.PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_corpora(config: cfg.PipelineConfig, count: int | None,
                     command: str) -> tuple[cfg.CorpusSpec, ...]:
    if count is not None and len(config.corpora) != count:
        raise UsageError(
            f"{command} needs exactly {count} corpora "
            f"(got {len(config.corpora)}); pass --corpus/--label pairs"
        )
    if not config.corpora:
        raise UsageError(f"{command} needs at least one corpus")
    return config.corpora


def _load_segmented(spec: cfg.CorpusSpec, config: cfg.PipelineConfig) -> ingest.Corpus:
    corpus = ingest.load_corpus(spec.path, spec.label, spec.format)
    return ingest.segment_corpus(corpus, config.segmentation)


def _corpus_assignment(
    spec: cfg.CorpusSpec,
    config: cfg.PipelineConfig,
    corpus: ingest.Corpus,
) -> topics.TopicAssignment:
    """Exactly one topic source per corpus: an assignment file if given,
    otherwise clustering its embeddings."""
    if spec.assignment:
        return topics.read_assignment_csv(spec.assignment)
    if not spec.embeddings:
        raise ConfigError(
            f"corpus {spec.label!r} has neither an assignment file nor embeddings"
        )
    params = config.cluster or topics.ClusterParams()
    matrix = load_embeddings(
        spec.embeddings, [s.sentence_id for s in corpus.sentences]
    )
    return topics.cluster_embeddings(matrix, params)


def _write_manifest(out: Path, command: str, config, inputs, outputs, started) -> Path:
    payload = mf.build_manifest(command, cfg.config_as_dict(config),
                                inputs, outputs, started)
    path = out / f"{command.replace('-', '_')}_manifest.json"
    mf.write_manifest(path, payload)
    return path


def cmd_ingest(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "ingest")
    out = _out_dir(config)
    outputs = []
    for spec in specs:
        corpus = _load_segmented(spec, config)
        path = out / f"{spec.label}_sentences.jsonl"
        ingest.write_sentences_jsonl(corpus.sentences, path)
        outputs.append(path)
    _write_manifest(out, "ingest", config, [s.path for s in specs], outputs, started)
    return 0


def cmd_stats(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "stats")
    out = _out_dir(config)
    path = out / "corpus_stats.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "total_sentences", "avg_len", "min_len",
                         "max_len", "under_5", "over_25"])
        for spec in specs:
            st = ingest.corpus_stats(_load_segmented(spec, config))
            writer.writerow([spec.label, st.total_sentences, f"{st.avg_len:.2f}",
                             st.min_len, st.max_len, st.under_5, st.over_25])
    _write_manifest(out, "stats", config, [s.path for s in specs], [path], started)
    return 0


def cmd_freq(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "freq")
    out = _out_dir(config)
    orders = {"1": (1,), "2": (2,), "both": (1, 2)}[args.ngram]
    outputs = []
    for spec in specs:
        corpus = _load_segmented(spec, config)
        for n in orders:
            table = lex.count_ngrams(corpus, n, config.tokenizer)
            name = "unigrams" if n == 1 else "bigrams"
            path = out / f"{spec.label}_{name}.csv"
            lex.write_frequency_csv(table, path)
            outputs.append(path)
    _write_manifest(out, "freq", config, [s.path for s in specs], outputs, started)
    return 0


def cmd_compare_freq(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    spec_a, spec_b = _require_corpora(config, 2, "compare-freq")
    out = _out_dir(config)
    table_a = lex.count_ngrams(_load_segmented(spec_a, config), 1, config.tokenizer)
    table_b = lex.count_ngrams(_load_segmented(spec_b, config), 1, config.tokenizer)
    rows = lex.compare_top_k(table_a, table_b, k=config.compare_k,
                             sort_by=args.sort_by)
    path = out / "freq_comparison.csv"
    lex.write_comparison_csv(rows, path)
    _write_manifest(out, "compare-freq", config,
                    [spec_a.path, spec_b.path], [path], started)
    return 0


def cmd_cluster(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "cluster")
    out = _out_dir(config)
    outputs, inputs = [], []
    for spec in specs:
        if spec.assignment:
            raise ConfigError(
                f"corpus {spec.label!r} already names an assignment file; "
                "cluster and ingested assignments are mutually exclusive"
            )
        if not spec.embeddings:
            raise ConfigError(f"corpus {spec.label!r} has no embeddings file")
        corpus = _load_segmented(spec, config)
        index = [s.sentence_id for s in corpus.sentences]
        matrix = load_embeddings(spec.embeddings, index)
        params = config.cluster or topics.ClusterParams()
        assignment = topics.cluster_embeddings(matrix, params)
        a_path = out / f"{spec.label}_assignment.csv"
        topics.write_assignment_csv(assignment, a_path)
        if spec.coords:
            coords = topics.project_2d(matrix, "ingest_file", coords=spec.coords)
        else:
            coords = topics.project_2d(matrix, "pca")
        p_path = out / f"{spec.label}_plot2d.csv"
        topics.write_plot_csv(p_path, index, coords, assignment)
        outputs.extend([a_path, p_path])
        inputs.extend([spec.path, spec.embeddings])
    _write_manifest(out, "cluster", config, inputs, outputs, started)
    return 0


def cmd_keywords(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "keywords")
    out = _out_dir(config)
    outputs, inputs = [], []
    for spec in specs:
        corpus = _load_segmented(spec, config)
        assignment = _corpus_assignment(spec, config, corpus)
        keywords = topics.ctfidf_keywords(corpus, assignment, config.tokenizer,
                                          k=config.metrics.keywords_k)
        path = out / f"{spec.label}_keywords.csv"
        topics.write_keywords_csv(keywords, path)
        outputs.append(path)
        inputs.extend(p for p in (spec.path, spec.embeddings, spec.assignment) if p)
    _write_manifest(out, "keywords", config, inputs, outputs, started)
    return 0


def cmd_eval(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "eval")
    out = _out_dir(config)
    outputs, inputs = [], []
    for spec in specs:
        corpus = _load_segmented(spec, config)
        assignment = _corpus_assignment(spec, config, corpus)
        keywords = topics.ctfidf_keywords(corpus, assignment, config.tokenizer,
                                          k=config.metrics.keywords_k)
        bigrams = lex.count_ngrams(corpus, 2, config.tokenizer)
        metrics = ev.compute_metrics(
            assignment, keywords, bigrams,
            rank=config.metrics.rank,
            rank_mode=config.metrics.rank_mode,
            puv_k=config.metrics.puv_k,
            ngram_top_m=config.metrics.ngram_top_m,
        )
        path = out / f"{spec.label}_metrics.csv"
        _write_metrics_csv(path, metrics)
        outputs.append(path)
        inputs.extend(p for p in (spec.path, spec.embeddings, spec.assignment) if p)
    _write_manifest(out, "eval", config, inputs, outputs, started)
    return 0


def _write_metrics_csv(path: Path, metrics: ev.ModelMetrics) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow([ev.METRIC_LABELS["gini"], f"{metrics.gini:.2f}"])
        writer.writerow([ev.METRIC_LABELS["appearance_pct"],
                         f"{metrics.appearance_pct:.2f}"])
        writer.writerow([ev.METRIC_LABELS["topic20_size"], metrics.topic20_size])
        writer.writerow([ev.METRIC_LABELS["puv"], f"{metrics.puv:.2f}"])
        writer.writerow([ev.METRIC_LABELS["ngram_value"], f"{metrics.ngram_value:.2f}"])


def _read_metrics_csv(path: Path) -> ev.ModelMetrics:
    labels_to_field = {label: name for name, label in ev.METRIC_LABELS.items()}
    values: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            values[labels_to_field[row["metric"]]] = float(row["value"])
    return ev.ModelMetrics(
        gini=values["gini"], appearance_pct=values["appearance_pct"],
        topic20_size=int(values["topic20_size"]), puv=values["puv"],
        ngram_value=values["ngram_value"],
    )


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    specs = _require_corpora(config, None, "sweep")
    if config.sweep is None or not (config.sweep.k_clusters
                                    and config.sweep.noise_thresholds
                                    and config.sweep.seeds):
        raise ConfigError("sweep needs a config 'sweep' section with "
                          "k_clusters, noise_thresholds, and seeds lists")
    out = _out_dir(config)
    outputs, inputs = [], []
    for spec in specs:
        if not spec.embeddings:
            raise ConfigError(f"corpus {spec.label!r} has no embeddings file")
        corpus = _load_segmented(spec, config)
        index = [s.sentence_id for s in corpus.sentences]
        matrix = load_embeddings(spec.embeddings, index)
        bigrams = lex.count_ngrams(corpus, 2, config.tokenizer)
        runs = []
        for k in config.sweep.k_clusters:
            for tau in config.sweep.noise_thresholds:
                for seed in config.sweep.seeds:
                    params = topics.ClusterParams(
                        k_clusters=k, noise_threshold=tau, seed=seed,
                    )
                    assignment = topics.cluster_embeddings(matrix, params)
                    keywords = topics.ctfidf_keywords(
                        corpus, assignment, config.tokenizer,
                        k=config.metrics.keywords_k,
                    )
                    metrics = ev.compute_metrics(
                        assignment, keywords, bigrams,
                        rank=config.metrics.rank,
                        rank_mode=config.metrics.rank_mode,
                        puv_k=config.metrics.puv_k,
                        ngram_top_m=config.metrics.ngram_top_m,
                    )
                    runs.append(ev.RunRecord(
                        run_id=f"k{k}_t{tau}_s{seed}",
                        params={"k_clusters": k, "noise_threshold": tau,
                                "seed": seed},
                        metrics=metrics,
                    ))
        runs_path = out / f"{spec.label}_runs.jsonl"
        ev.write_runs_jsonl(runs, runs_path)
        filtered = ev.error_size_filter(runs)
        ranked = ev.rank_runs(list(filtered.kept) or list(runs))
        candidate = ranked[0].metrics if ranked else None
        summary = ev.sweep_summary(runs)
        summary_path = out / f"{spec.label}_sweep_summary.csv"
        ev.write_summary_csv(summary_path, summary, candidate)
        outputs.extend([runs_path, summary_path])
        inputs.extend([spec.path, spec.embeddings])
    _write_manifest(out, "sweep", config, inputs, outputs, started)
    return 0


def cmd_compare_models(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    spec_a, spec_b = _require_corpora(config, 2, "compare-models")
    out = _out_dir(config)
    keyword_paths = []
    pools = []
    keyword_lists = []
    for spec in (spec_a, spec_b):
        path = out / f"{spec.label}_keywords.csv"
        if not path.is_file():
            raise ConfigError(
                f"missing {path}; run the keywords subcommand for "
                f"{spec.label!r} first"
            )
        keyword_paths.append(path)
        keyword_lists.append(topics.read_keywords_csv(path))
        corpus = _load_segmented(spec, config)
        pools.append(cmp.build_keyword_pool(spec.label, corpus, config.tokenizer))
    report = cmp.keyword_overlap(keyword_lists[0], keyword_lists[1],
                                 pools[0], pools[1])
    path = out / "model_overlap.csv"
    cmp.write_overlap_csv(report, path)
    _write_manifest(out, "compare-models", config,
                    [spec_a.path, spec_b.path, *keyword_paths], [path], started)
    return 0


def cmd_report(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args)
    spec_a, spec_b = _require_corpora(config, 2, "report")
    out = _out_dir(config)

    stats = _read_stats_csv(out / "corpus_stats.csv")
    comparison = _read_comparison_csv(out / "freq_comparison.csv")
    metrics = {}
    for spec in (spec_a, spec_b):
        path = out / f"{spec.label}_metrics.csv"
        metrics[spec.label] = _read_metrics_csv(path) if path.is_file() else None
    overlap = _read_overlap_csv(out / "model_overlap.csv")

    inputs = cmp.ReportInputs(
        label_a=spec_a.label, label_b=spec_b.label,
        stats_a=stats.get(spec_a.label), stats_b=stats.get(spec_b.label),
        comparison=comparison,
        metrics_a=metrics[spec_a.label], metrics_b=metrics[spec_b.label],
        overlap=overlap,
    )
    path = out / "report.md"
    path.write_text(cmp.side_by_side_report(inputs), encoding="utf-8")
    _write_manifest(out, "report", config, [spec_a.path, spec_b.path],
                    [path], started)
    return 0


def _read_stats_csv(path: Path) -> dict[str, ingest.CorpusStats]:
    if not path.is_file():
        return {}
    stats = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            stats[row["label"]] = ingest.CorpusStats(
                total_sentences=int(row["total_sentences"]),
                avg_len=float(row["avg_len"]),
                min_len=int(row["min_len"]), max_len=int(row["max_len"]),
                under_5=int(row["under_5"]), over_25=int(row["over_25"]),
            )
    return stats


def _read_comparison_csv(path: Path) -> list[lex.ComparisonRow] | None:
    if not path.is_file():
        return None
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(lex.ComparisonRow(
                word=row["word"],
                count_a=int(row["count_a"]),
                percentile_a=float(row["percentile_a"]),
                count_b=int(row["count_b"]),
                percentile_b=float(row["percentile_b"]),
            ))
    return rows


def _read_overlap_csv(path: Path) -> cmp.OverlapReport | None:
    if not path.is_file():
        return None
    with open(path, encoding="utf-8", newline="") as fh:
        row = next(csv.DictReader(fh))
    terms = tuple(t for t in row["shared_terms"].split("|") if t)
    return cmp.OverlapReport(
        model_a=row["model_a"], model_b=row["model_b"], shared_terms=terms,
        pct_a=float(row["pct_a"]), pct_b=float(row["pct_b"]),
        pool_a=int(row["pool_a"]), pool_b=int(row["pool_b"]),
    )


_HANDLERS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "freq": cmd_freq,
    "compare-freq": cmd_compare_freq,
    "cluster": cmd_cluster,
    "keywords": cmd_keywords,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "compare-models": cmd_compare_models,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"topiclab {args.command}: {exc}", file=sys.stderr)
        return 1
    except TopiclabError as exc:
        print(f"topiclab {args.command}: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
