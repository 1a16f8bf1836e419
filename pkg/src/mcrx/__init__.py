"""Layered corpus index, asymmetric document similarity, solution-critic loop."""

from . import errors
from .activation import (
    ActivationPass,
    Emission,
    TraceEntry,
    activate,
    collect,
    collect_on_bag,
    emit,
    run_pass,
    self_activation,
    trace,
)
from .ingest import (
    DEFAULT_RULES,
    RawDocument,
    TokenizationRules,
    build_corpus,
    compute_weights,
    ingest_document,
    read_corpus_dir,
    read_corpus_jsonl,
    reconstruct,
    segment,
    tokenize,
)
from .kb import (
    ARTICLE,
    PARAGRAPH,
    SENTENCE,
    WORD,
    KnowledgeBase,
    Node,
    load_index,
    save_index,
)
from .scl import (
    DocumentCritic,
    ExitCriteria,
    Feedback,
    LoopReport,
    apply_rules,
    document_candidate_generator,
    run,
    watch_read,
)
from .seqdemo import (
    ActionKB,
    default_actions,
    execute,
    learn_demonstration,
    load_actions,
    save_actions,
    solve,
)
from .similarity import QueryScorer, RankedResult, combine, normalize, rank, results_to_tsv

__all__ = [
    "errors",
    "ActivationPass",
    "Emission",
    "TraceEntry",
    "activate",
    "collect",
    "collect_on_bag",
    "emit",
    "run_pass",
    "self_activation",
    "trace",
    "DEFAULT_RULES",
    "RawDocument",
    "TokenizationRules",
    "build_corpus",
    "compute_weights",
    "ingest_document",
    "read_corpus_dir",
    "read_corpus_jsonl",
    "reconstruct",
    "segment",
    "tokenize",
    "ARTICLE",
    "PARAGRAPH",
    "SENTENCE",
    "WORD",
    "KnowledgeBase",
    "Node",
    "load_index",
    "save_index",
    "DocumentCritic",
    "ExitCriteria",
    "Feedback",
    "LoopReport",
    "apply_rules",
    "document_candidate_generator",
    "run",
    "watch_read",
    "ActionKB",
    "default_actions",
    "execute",
    "learn_demonstration",
    "load_actions",
    "save_actions",
    "solve",
    "QueryScorer",
    "RankedResult",
    "combine",
    "normalize",
    "rank",
    "results_to_tsv",
]
