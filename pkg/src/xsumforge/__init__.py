"""xsumforge: mine cross-lingual summary pairs, build leakage-safe splits,
sample balanced training batches, and score summaries across languages."""

__version__ = "0.1.0"
