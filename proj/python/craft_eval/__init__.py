"""Python bindings for the cultural reasoning evaluation engine."""

import json as _json

from ._core import (
    ConfigError,
    CraftError,
    DataError,
    DimensionError,
    DomainError,
    IoError,
    MarkerLexicon,
    ParseError,
    ProviderError,
    __version__,
    answer_consistency,
    bootstrap_ci,
    cosine,
    cultural_fluency,
    depth,
    deviation,
    embedding_digest,
    explanation_consistency,
    extract_features,
    kruskal_wallis,
    linguistic_adaptation,
    normalize,
    run_stage,
    wilcoxon,
)
from ._core import validate_corpus as _validate_corpus


def validate_corpus(path, format=None, runs=3):
    """Validation report for a corpus file as a dict."""
    return _json.loads(_validate_corpus(path, format, runs))


__all__ = [
    "ConfigError",
    "CraftError",
    "DataError",
    "DimensionError",
    "DomainError",
    "IoError",
    "MarkerLexicon",
    "ParseError",
    "ProviderError",
    "__version__",
    "answer_consistency",
    "bootstrap_ci",
    "cosine",
    "cultural_fluency",
    "depth",
    "deviation",
    "embedding_digest",
    "explanation_consistency",
    "extract_features",
    "kruskal_wallis",
    "linguistic_adaptation",
    "normalize",
    "run_stage",
    "validate_corpus",
    "wilcoxon",
]
