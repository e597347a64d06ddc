"""Exception hierarchy shared across the toolkit.

``TopiclabError`` is the base for everything the CLI maps to a data-error
exit code; usage problems are left to argparse.
"""


class TopiclabError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(TopiclabError):
    """Unreadable, malformed, or inconsistent corpus input."""


class TermNotFoundError(TopiclabError):
    """A term was looked up in a frequency table that does not contain it."""


class EmbeddingFormatError(TopiclabError):
    """An embedding file violates the binary or jsonl contract."""


class ClusterError(TopiclabError):
    """Clustering preconditions violated (e.g. more clusters than points)."""


class MetricError(TopiclabError):
    """Metric preconditions violated (e.g. PUV with fewer than two topics)."""


class GroupingError(TopiclabError):
    """Invalid thematic grouping configuration."""


class ConfigError(TopiclabError):
    """Invalid pipeline configuration file or flag combination."""
