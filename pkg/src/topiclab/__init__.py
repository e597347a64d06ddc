"""topiclab: deterministic corpus comparison and topic-model evaluation."""

__version__ = "0.1.0"
