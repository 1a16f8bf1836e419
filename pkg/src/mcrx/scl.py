"""Generic solution-critic loop.

A generator proposes candidates, a critic scores them against the goal,
and the previous score plus the best-so-far flow back into the
generator before it proposes again. The loop stops on the first
satisfied exit bound. Attention rules and monitored node reads hook the
loop into the knowledge base without baking anything into stored
weights, so every rule is reversible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .activation import ActivationPass
from .errors import NoCandidateError, UnknownLabelError
from .kb import KnowledgeBase
from .similarity import QueryScorer

Generator = Callable[["Feedback | None"], Any]
Critic = Callable[[Any], float]

EXIT_THRESHOLD = "threshold"
EXIT_ITERATIONS = "iterations"
EXIT_TIME = "time"
EXIT_EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class ExitCriteria:
    """Loop budget; at least one bound must be finite."""

    max_iterations: int | None = None
    max_seconds: float | None = None
    score_threshold: float | None = None

    def __post_init__(self):
        if (
            self.max_iterations is None
            and self.max_seconds is None
            and self.score_threshold is None
        ):
            raise ValueError("at least one exit bound must be set")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Feedback:
    """What the generator learns from the previous iteration."""

    iteration: int
    score: float
    best_score: float
    best: Any


@dataclass
class LoopReport:
    best: Any
    best_score: float
    iterations: int
    exit_reason: str
    history: list[tuple[Any, float]] = field(default_factory=list)
    watch_log: list[tuple[int, str, float]] = field(default_factory=list)


def run(
    generator: Generator,
    critic: Critic,
    exit_criteria: ExitCriteria,
    watch: tuple[str, ...] | list[str] = (),
) -> LoopReport:
    """Iterate generate -> criticize -> feedback until an exit bound trips.

    The generator signals exhaustion by returning None; exhaustion before
    the first candidate is an error. Wall time is checked between
    iterations only, never mid-candidate, so reports are deterministic
    for a given generator/critic pair.
    """
    if watch and not hasattr(critic, "watch_values"):
        raise ValueError("watch labels given but the critic cannot read them")
    started = time.monotonic()
    history: list[tuple[Any, float]] = []
    watch_log: list[tuple[int, str, float]] = []
    best: Any = None
    best_score = float("-inf")
    feedback: Feedback | None = None
    iterations = 0
    while True:
        if (
            exit_criteria.max_iterations is not None
            and iterations >= exit_criteria.max_iterations
        ):
            reason = EXIT_ITERATIONS
            break
        if (
            exit_criteria.max_seconds is not None
            and iterations > 0
            and time.monotonic() - started >= exit_criteria.max_seconds
        ):
            reason = EXIT_TIME
            break
        candidate = generator(feedback)
        if candidate is None:
            if iterations == 0:
                raise NoCandidateError("generator produced no candidate")
            reason = EXIT_EXHAUSTED
            break
        score = critic(candidate)
        iterations += 1
        history.append((candidate, score))
        if score > best_score:
            best, best_score = candidate, score
        if watch:
            for label, value in critic.watch_values(tuple(watch)).items():
                watch_log.append((iterations, label, value))
        feedback = Feedback(iterations, score, best_score, best)
        if (
            exit_criteria.score_threshold is not None
            and score >= exit_criteria.score_threshold
        ):
            reason = EXIT_THRESHOLD
            break
    return LoopReport(best, best_score, iterations, reason, history, watch_log)


def apply_rules(
    kb: KnowledgeBase, rules: dict[str, float]
) -> tuple[int, list[str]]:
    """Set attention multipliers by node label, atomically.

    A label may resolve at the word and the article level at once; both
    get the multiplier. Returns how many nodes were touched plus the
    labels that resolved to nothing (data, not an error).
    """
    for label, multiplier in rules.items():
        if multiplier < 0:
            raise ValueError(f"rule {label!r}: multiplier must be >= 0")
    updated = kb.attention_snapshot()
    applied = 0
    unresolved = []
    for label, multiplier in rules.items():
        targets = [
            node_id
            for node_id in (kb.word_id(label), kb.article_id(label))
            if node_id is not None
        ]
        if not targets:
            unresolved.append(label)
            continue
        for node_id in targets:
            if multiplier == 1.0:
                updated.pop(node_id, None)
            else:
                updated[node_id] = float(multiplier)
            applied += 1
    kb.attention = updated  # single reference swap: no torn snapshots
    return applied, unresolved


def watch_read(
    kb: KnowledgeBase,
    labels: tuple[str, ...] | list[str],
    activation_pass: ActivationPass,
) -> dict[str, float]:
    """Read monitored node activations out of a finished pass.

    Word labels report emission * attention * weight; article labels
    report the collected activation. A label matching both levels reads
    as the word.
    """
    values: dict[str, float] = {}
    for label in labels:
        word_id = kb.word_id(label)
        if word_id is not None:
            emission = activation_pass.emission.values.get(word_id, 0.0)
            multiplier = activation_pass.attention.get(word_id, 1.0)
            values[label] = emission * multiplier * kb.nodes[word_id].weight
            continue
        article_id = kb.article_id(label)
        if article_id is not None:
            values[label] = activation_pass.articles.get(article_id, 0.0)
            continue
        raise UnknownLabelError(f"label {label!r} resolves to no node")
    return values


def document_candidate_generator(scorer: QueryScorer, k: int, exclude_self: bool = False) -> Generator:
    """Generator enumerating a query's top-k candidates in forward order.

    Document comparison is the degenerate loop: candidates are existing
    articles, no composition needed, so the feedback goes unused.
    """
    pending = iter(scorer.candidates(k, exclude_self))

    def generate(feedback: Feedback | None):
        return next(pending, None)

    return generate


class DocumentCritic:
    """Critic scoring candidate articles with the similarity pipeline."""

    def __init__(self, scorer: QueryScorer):
        self.scorer = scorer

    def __call__(self, article_id: int) -> float:
        return self.scorer.score(article_id).percent

    def watch_values(self, labels: tuple[str, ...]) -> dict[str, float]:
        return watch_read(self.scorer.kb, labels, self.scorer.activation_pass)
