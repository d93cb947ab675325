"""Cluster-based retrieval-augmented verification of image+text claims."""

__version__ = "0.1.0"
