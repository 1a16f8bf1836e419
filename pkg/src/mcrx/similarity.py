"""Asymmetric document similarity: candidates, combination, ranking.

The forward pass activates the whole corpus from the query and the
best-activated articles become candidates. Each candidate is then
re-scored in reverse (its own emission collected on the query's token
bag) and the two directions fold into one raw score that is linear in
the reverse direction and logarithmic in the forward one. Raw scores
are reported as a percentage of the query's self score, so querying a
document's own text scores exactly 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .activation import (
    ActivationPass,
    Source,
    collect,
    collect_on_bag,
    emit,
)
from .errors import EmptyIndexError, UnscorableQueryError
from .ingest import DEFAULT_RULES, TokenizationRules
from .kb import KnowledgeBase, render_real

DEFAULT_CANDIDATES = 100
DEFAULT_RESULTS = 10


@dataclass(slots=True)
class RankedResult:
    article_id: int
    label: str
    title: str
    percent: float
    raw: float
    reverse: float  # candidate-to-query activation, weighted linearly
    forward: float  # query-to-candidate activation, damped by ln(1+x)


def combine(reverse: float, forward: float, literal_log: bool = False) -> float:
    """Fold the two directional activations into one raw score.

    Default is reverse * ln(1 + forward): zero at forward 0, monotone in
    both directions, and deliberately favoring the reverse direction.
    literal_log=True drops the +1 guard; activations below 1 then
    produce negative scores and 0 is a domain error, so it exists only
    for experimentation.
    """
    if literal_log:
        return reverse * math.log(forward)
    return reverse * math.log1p(forward)


def normalize(raw: float, self_raw: float) -> float:
    """Express a raw score as a percentage of the query's self score."""
    if self_raw <= 0:
        raise UnscorableQueryError()
    # divide first: raw == self_raw then gives exactly 1.0, hence 100.0
    return 100.0 * (raw / self_raw)


class QueryScorer:
    """One query's passes, reusable across candidates.

    Builds the forward activation map and the self score once; score()
    then runs only the candidate's reverse pass.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        query: Source,
        attention: dict[int, float] | None = None,
        literal_log: bool = False,
        rules: TokenizationRules = DEFAULT_RULES,
        workers: int = 1,
    ):
        self.kb = kb
        self.literal_log = literal_log
        self.rules = rules
        self.attention = (
            kb.attention_snapshot() if attention is None else dict(attention)
        )
        self.source_article = query if isinstance(query, int) else None
        self.emission = emit(kb, query, rules)
        self.forward_map = collect(kb, self.emission, self.attention, workers)
        self.self_activation = collect_on_bag(
            kb, self.emission, self.emission.bag, self.attention
        )
        if self.self_activation == 0.0:
            raise UnscorableQueryError(self.emission.unknown_words)
        self.self_raw = combine(self.self_activation, self.self_activation, literal_log)
        if self.self_raw <= 0:
            raise UnscorableQueryError(self.emission.unknown_words)

    @property
    def activation_pass(self) -> ActivationPass:
        return ActivationPass(self.emission, self.forward_map, self.attention)

    def candidates(self, k: int, exclude_self: bool = True) -> list[int]:
        """Top-k articles by forward activation; ties break by label."""
        ranked = sorted(
            self.forward_map.items(),
            key=lambda item: (-item[1], self.kb.nodes[item[0]].label),
        )
        top = [article_id for article_id, _ in ranked[:k]]
        if exclude_self and self.source_article is not None:
            top = [a for a in top if a != self.source_article]
        return top

    def score(self, article_id: int) -> RankedResult:
        forward = self.forward_map.get(article_id, 0.0)
        reverse_emission = emit(self.kb, article_id, self.rules)
        reverse = collect_on_bag(
            self.kb, reverse_emission, self.emission.bag, self.attention
        )
        raw = combine(reverse, forward, self.literal_log)
        node = self.kb.node(article_id)
        return RankedResult(
            article_id=article_id,
            label=node.label or "",
            title=self.kb.title(article_id),
            percent=normalize(raw, self.self_raw),
            raw=raw,
            reverse=reverse,
            forward=forward,
        )


def rank(
    kb: KnowledgeBase,
    query: Source,
    k: int = DEFAULT_CANDIDATES,
    n: int = DEFAULT_RESULTS,
    exclude_self: bool = True,
    attention: dict[int, float] | None = None,
    literal_log: bool = False,
    rules: TokenizationRules = DEFAULT_RULES,
    workers: int = 1,
) -> list[RankedResult]:
    """Ranked retrieval for one query.

    Forward pass, top-k candidate cut, reverse pass per candidate,
    combination, normalization to the query's self score, then the best
    n results sorted by percent (ties by label).
    """
    if k < n or n < 1:
        raise ValueError("need k >= n >= 1")
    if kb.article_count == 0:
        raise EmptyIndexError("the index holds no documents")
    scorer = QueryScorer(kb, query, attention, literal_log, rules, workers)
    results = [scorer.score(c) for c in scorer.candidates(k, exclude_self)]
    results.sort(key=lambda result: (-result.percent, result.label))
    return results[:n]


def results_to_tsv(results: list[RankedResult]) -> str:
    """Machine-readable results: rank, id, title, percent, reverse, forward."""
    lines = []
    for position, result in enumerate(results, start=1):
        lines.append(
            "\t".join(
                (
                    str(position),
                    result.label,
                    result.title,
                    render_real(result.percent),
                    render_real(result.reverse),
                    render_real(result.forward),
                )
            )
        )
    return "\n".join(lines)
