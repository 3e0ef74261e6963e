"""Indexing-time Probabilistic Structured Queries (PSQ) for cross-language retrieval."""

__version__ = "0.1.0"
