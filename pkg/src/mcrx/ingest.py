"""Deterministic text segmentation and hierarchy construction.

Tokenization is deliberately crude: maximal runs of Unicode letters and
digits, lowercased; everything else separates. Sentences end after
'.', '!' or '?'; paragraphs are separated by one or more blank lines.
No stemming, no stopwords, no markup handling. The same input always
segments the same way.
"""

from __future__ import annotations

import math
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path

from .errors import (
    CorpusFormatError,
    DuplicateDocumentError,
    EmptyDocumentError,
)
from .kb import ARTICLE, PARAGRAPH, SENTENCE, WORD, KnowledgeBase

# Unicode letters and digits; underscore is a separator like punctuation.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])")


@dataclass(frozen=True)
class TokenizationRules:
    lowercase: bool = True
    min_token_len: int = 1


DEFAULT_RULES = TokenizationRules()


@dataclass(frozen=True)
class RawDocument:
    id: str
    body: str
    title: str | None = None


def tokenize(text: str, rules: TokenizationRules = DEFAULT_RULES) -> list[str]:
    """Split text into tokens: maximal letter/digit runs, lowercased."""
    tokens = _TOKEN_RE.findall(text)
    if rules.lowercase:
        tokens = [tok.lower() for tok in tokens]
    if rules.min_token_len > 1:
        tokens = [tok for tok in tokens if len(tok) >= rules.min_token_len]
    return tokens


def segment(
    text: str, rules: TokenizationRules = DEFAULT_RULES
) -> list[list[list[str]]]:
    """Segment text into paragraphs of sentences of tokens.

    Empty sentences and paragraphs are dropped, so a document of pure
    punctuation segments to [].
    """
    paragraphs = []
    for block in _paragraph_blocks(text):
        sentences = []
        for piece in _SENTENCE_SPLIT_RE.split(block):
            tokens = tokenize(piece, rules)
            if tokens:
                sentences.append(tokens)
        if sentences:
            paragraphs.append(sentences)
    return paragraphs


def _paragraph_blocks(text: str) -> list[str]:
    blocks = []
    current: list[str] = []
    for line in text.splitlines():
        if line.strip():
            current.append(line)
        elif current:
            blocks.append("\n".join(current))
            current = []
    if current:
        blocks.append("\n".join(current))
    return blocks


def ingest_document(
    kb: KnowledgeBase,
    doc: RawDocument,
    rules: TokenizationRules = DEFAULT_RULES,
) -> int:
    """Segment one document and insert its node hierarchy.

    Returns the article node id. Word weights become stale until
    compute_weights runs again.
    """
    segmented = segment(doc.body, rules)
    return ingest_segmented(kb, doc, segmented)


def ingest_segmented(
    kb: KnowledgeBase, doc: RawDocument, segmented: list[list[list[str]]]
) -> int:
    """Insert a pre-segmented document (the merge half of ingestion)."""
    if kb.article_id(doc.id) is not None:
        raise DuplicateDocumentError(f"document {doc.id!r} already ingested")
    if not segmented:
        raise EmptyDocumentError(f"document {doc.id!r} is empty after segmentation")
    paragraph_ids = []
    for sentences in segmented:
        sentence_ids = []
        for tokens in sentences:
            children = [
                (kb.add_node(WORD, tok), len(list(run)))
                for tok, run in groupby(tokens)
            ]
            sentence_ids.append((kb.add_node(SENTENCE, None, children), 1))
        paragraph_ids.append((kb.add_node(PARAGRAPH, None, sentence_ids), 1))
    article_id = kb.add_node(ARTICLE, doc.id, paragraph_ids)
    if doc.title is not None:
        kb.titles[article_id] = doc.title
    return article_id


def compute_weights(kb: KnowledgeBase) -> None:
    """Assign word weights wt(w) = ln(1 + D/df(w)); 1.0 elsewhere.

    The +1 smoothing keeps every indexed word strictly positive: a word
    present in every document still weighs ln 2 instead of silently
    vanishing from all scores.
    """
    d = kb.article_count
    if d < 1:
        raise ValueError("cannot compute weights on an empty knowledge base")
    for node in kb.nodes:
        if node.level != WORD:
            node.weight = 1.0
            continue
        df = kb.df.get(node.id, 0)
        node.weight = math.log(1.0 + d / df) if df else 0.0
    kb.weights_computed = True


def reconstruct(kb: KnowledgeBase, article_id: int) -> list[list[list[str]]]:
    """Regenerate an article's nested token structure top-down.

    The result equals segment(original body) token for token.
    """
    node = kb.node(article_id)
    if node.level != kb.top_level:
        raise ValueError(
            f"node {article_id} is at level {node.level}, not an article"
        )
    paragraphs = []
    for paragraph_id, para_count in node.children:
        sentences = []
        for sentence_id, sent_count in kb.node(paragraph_id).children:
            tokens: list[str] = []
            for word_id, count in kb.node(sentence_id).children:
                tokens.extend([kb.nodes[word_id].label] * count)
            sentences.extend([tokens] * sent_count)
        paragraphs.extend([sentences] * para_count)
    return paragraphs


def build_corpus(
    docs: list[RawDocument],
    rules: TokenizationRules = DEFAULT_RULES,
    workers: int = 1,
) -> tuple[KnowledgeBase, list[str]]:
    """Build a weighted knowledge base from a document collection.

    Documents may be segmented in parallel; graph insertion happens in a
    single sequential pass ordered by document id, so neither the input
    order nor the worker count can change the result. Documents that are
    empty after segmentation are skipped; their ids are returned.
    """
    ordered = sorted(docs, key=lambda doc: doc.id)
    for left, right in zip(ordered, ordered[1:]):
        if left.id == right.id:
            raise DuplicateDocumentError(f"document {left.id!r} appears twice")
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            segmented_docs = list(
                pool.map(lambda doc: segment(doc.body, rules), ordered)
            )
    else:
        segmented_docs = [segment(doc.body, rules) for doc in ordered]

    kb = KnowledgeBase()
    skipped = []
    for doc, segmented in zip(ordered, segmented_docs):
        if not segmented:
            skipped.append(doc.id)
            continue
        ingest_segmented(kb, doc, segmented)
    if kb.article_count:
        compute_weights(kb)
    return kb, skipped


def read_corpus_dir(path: str) -> list[RawDocument]:
    """Read a directory of *.txt files; the file stem is the document id."""
    root = Path(path)
    if not root.is_dir():
        raise OSError(f"{path!r} is not a readable directory")
    docs = []
    for file in sorted(root.glob("*.txt")):
        docs.append(RawDocument(id=file.stem, body=file.read_text("utf-8")))
    return docs


def read_corpus_jsonl(path: str) -> list[RawDocument]:
    """Read a JSONL corpus: one {"id","title"?,"text"} object per line."""
    docs = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no) from exc
            if not isinstance(record, dict):
                raise CorpusFormatError("record is not an object", line_no)
            doc_id = record.get("id")
            text = record.get("text")
            title = record.get("title")
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusFormatError("missing or empty 'id'", line_no)
            if not isinstance(text, str):
                raise CorpusFormatError("missing 'text'", line_no)
            if title is not None and not isinstance(title, str):
                raise CorpusFormatError("'title' is not a string", line_no)
            if doc_id in seen:
                raise CorpusFormatError(
                    f"duplicate id {doc_id!r} (first at line {seen[doc_id]})", line_no
                )
            seen[doc_id] = line_no
            docs.append(RawDocument(id=doc_id, body=text, title=title))
    return docs
