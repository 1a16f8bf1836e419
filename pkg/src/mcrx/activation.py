"""One top-down / bottom-up activation pass over the knowledge base.

A source (an indexed article or ad-hoc text) emits activation over the
word layer, normalized by its own length: e(w) = tf(w) / len. Collection
then runs word -> article over posting lists:

    A(d) = m(d) * sum_w e(w) * m(w) * wt(w) * tf_d(w)

with m(.) the attention multipliers. Emission normalization makes the
metric length-asymmetric on purpose: a short text activates a long
superset document more strongly than the reverse.

All reductions use math.fsum, so activation values are exactly rounded
and therefore bit-identical regardless of ingestion order, of how the
word range is partitioned across workers, and of save/load cycles.
Intermediate sentence/paragraph nodes never modulate cross-document
activation; they are consulted only to attribute contributions (trace).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import fsum

from .errors import EmptyDocumentError, StaleWeightsError
from .ingest import DEFAULT_RULES, TokenizationRules, tokenize
from .kb import WORD, KnowledgeBase

Source = int | str  # article node id, or raw text


@dataclass(slots=True)
class Emission:
    """Word-layer activation of one source."""

    values: dict[int, float]  # word id -> e(w) = tf/len
    bag: dict[int, int]  # word id -> tf, KB words only
    length: int  # total source tokens, unknown ones included
    unknown_words: int  # distinct source tokens absent from the KB


@dataclass(slots=True)
class TraceEntry:
    node_id: int
    level: int
    contribution: float


@dataclass(slots=True)
class ActivationPass:
    """Everything one pass computed, kept for monitoring reads."""

    emission: Emission
    articles: dict[int, float]
    attention: dict[int, float]


def emit(
    kb: KnowledgeBase,
    source: Source,
    rules: TokenizationRules = DEFAULT_RULES,
) -> Emission:
    """Project a source onto the word layer.

    Unknown words contribute nothing and are only counted; external text
    is first-class, it does not need to be in the corpus.
    """
    if isinstance(source, int):
        node = kb.node(source)
        if node.level != kb.top_level:
            raise ValueError(f"node {source} is not an article")
        bag = kb.article_bags[source]
        length = kb.article_len[source]
        unknown = 0
    else:
        tokens = tokenize(source, rules)
        length = len(tokens)
        bag = {}
        missing = set()
        for token in tokens:
            word_id = kb.word_id(token)
            if word_id is None:
                missing.add(token)
            else:
                bag[word_id] = bag.get(word_id, 0) + 1
        unknown = len(missing)
    if length == 0:
        raise EmptyDocumentError("source is empty after segmentation")
    values = {word_id: count / length for word_id, count in bag.items()}
    return Emission(values, dict(bag), length, unknown)


def _word_factors(
    kb: KnowledgeBase, emission: Emission, attention: dict[int, float]
) -> list[tuple[int, float]]:
    """Per-word factor e(w)*m(w)*wt(w); zero factors drop out entirely."""
    if not kb.weights_computed:
        raise StaleWeightsError("compute weights before running activation")
    factors = []
    for word_id, value in emission.values.items():
        factor = value * attention.get(word_id, 1.0) * kb.nodes[word_id].weight
        if factor != 0.0:
            factors.append((word_id, factor))
    return factors


def collect(
    kb: KnowledgeBase,
    emission: Emission,
    attention: dict[int, float] | None = None,
    workers: int = 1,
) -> dict[int, float]:
    """Collect word activation up to the article layer via posting lists.

    Articles with zero activation are absent from the map.
    """
    if attention is None:
        attention = kb.attention_snapshot()
    factors = _word_factors(kb, emission, attention)

    if workers > 1 and len(factors) > 1:
        chunk = (len(factors) + workers - 1) // workers
        parts = [factors[i : i + chunk] for i in range(0, len(factors), chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda p: _gather_terms(kb, p), parts))
        terms: dict[int, list[float]] = {}
        for partial in partials:
            for article_id, values in partial.items():
                terms.setdefault(article_id, []).extend(values)
    else:
        terms = _gather_terms(kb, factors)

    articles = {}
    for article_id, values in terms.items():
        activation = fsum(values) * attention.get(article_id, 1.0)
        if activation != 0.0:
            articles[article_id] = activation
    return articles


def _gather_terms(
    kb: KnowledgeBase, factors: list[tuple[int, float]]
) -> dict[int, list[float]]:
    terms: dict[int, list[float]] = {}
    for word_id, factor in factors:
        for article_id, tf in kb.postings.get(word_id, ()):
            terms.setdefault(article_id, []).append(factor * tf)
    return terms


def collect_on_bag(
    kb: KnowledgeBase,
    emission: Emission,
    bag: dict[int, int],
    attention: dict[int, float] | None = None,
) -> float:
    """Collect an emission against one explicit token bag."""
    if attention is None:
        attention = kb.attention_snapshot()
    factors = _word_factors(kb, emission, attention)
    return fsum(factor * bag[word_id] for word_id, factor in factors if word_id in bag)


def run_pass(
    kb: KnowledgeBase,
    source: Source,
    attention: dict[int, float] | None = None,
    rules: TokenizationRules = DEFAULT_RULES,
    workers: int = 1,
) -> ActivationPass:
    """Emit from a source and collect over the whole corpus."""
    if attention is None:
        attention = kb.attention_snapshot()
    emission = emit(kb, source, rules)
    articles = collect(kb, emission, attention, workers)
    return ActivationPass(emission, articles, attention)


def activate(
    kb: KnowledgeBase,
    source: Source,
    attention: dict[int, float] | None = None,
    rules: TokenizationRules = DEFAULT_RULES,
    workers: int = 1,
) -> dict[int, float]:
    """Article activation map for a source (emit + collect)."""
    return run_pass(kb, source, attention, rules, workers).articles


def self_activation(
    kb: KnowledgeBase,
    source: Source,
    attention: dict[int, float] | None = None,
    rules: TokenizationRules = DEFAULT_RULES,
) -> float:
    """Activation of a source collected on its own token bag.

    Strictly positive as soon as one source word is indexed (and not
    attention-muted); 0.0 means the source is unscorable.
    """
    emission = emit(kb, source, rules)
    return collect_on_bag(kb, emission, emission.bag, attention)


def trace(
    kb: KnowledgeBase,
    source: Source,
    article_id: int,
    level: int,
    top_n: int,
    attention: dict[int, float] | None = None,
    rules: TokenizationRules = DEFAULT_RULES,
) -> list[TraceEntry]:
    """Attribute a document's activation to its nodes at one level.

    Contributions at any level sum to the document's activation (before
    the article's own attention multiplier). Ties break by node id.
    """
    node = kb.node(article_id)
    if node.level != kb.top_level:
        raise ValueError(f"node {article_id} is not an article")
    if not WORD <= level < kb.top_level:
        raise ValueError("trace level must be below the article level")
    if attention is None:
        attention = kb.attention_snapshot()
    emission = emit(kb, source, rules)
    factors = dict(_word_factors(kb, emission, attention))

    occurrences: dict[int, int] = {}
    _collect_level(kb, article_id, level, 1, occurrences)
    entries = []
    for member_id, multiplicity in occurrences.items():
        bag = kb.subtree_bag(member_id, multiplicity)
        contribution = fsum(
            factors[word_id] * count
            for word_id, count in bag.items()
            if word_id in factors
        )
        entries.append(TraceEntry(member_id, level, contribution))
    entries.sort(key=lambda entry: (-entry.contribution, entry.node_id))
    return entries[: max(top_n, 0)]


def _collect_level(
    kb: KnowledgeBase,
    node_id: int,
    level: int,
    factor: int,
    acc: dict[int, int],
) -> None:
    node = kb.nodes[node_id]
    if node.level == level:
        acc[node_id] = acc.get(node_id, 0) + factor
        return
    for child_id, count in node.children:
        _collect_level(kb, child_id, level, factor * count, acc)
