"""Regulatory passage retrieval, answer generation, and reference-free
answer scoring toolkit."""

__version__ = "0.1.0"
