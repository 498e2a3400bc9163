"""BM25 retrieval with impact-weight re-ranking and passage expansion."""

from ._core import (
    ImpactError,
    Pipeline,
    StopwordSet,
    Vocabulary,
    bench,
    default_stopwords,
    encode_query,
    eval_run,
    evaluate,
    expand,
    expand_passage,
    impact_index,
    index,
    load_stopwords,
    rerank_run,
    train,
    weights,
)

__all__ = [
    "ImpactError",
    "Pipeline",
    "StopwordSet",
    "Vocabulary",
    "bench",
    "default_stopwords",
    "encode_query",
    "eval_run",
    "evaluate",
    "expand",
    "expand_passage",
    "impact_index",
    "index",
    "load_stopwords",
    "rerank_run",
    "train",
    "weights",
]

__version__ = "0.1.0"
