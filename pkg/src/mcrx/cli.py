"""Command-line front end: build, query, compare, trace, scl-demo, stats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import seqdemo
from .activation import collect_on_bag, emit, trace as trace_op
from .errors import (
    CorpusFormatError,
    EmptyIndexError,
    IndexFormatError,
    InvalidDemonstrationError,
    McrxError,
    UnknownLabelError,
    UnscorableQueryError,
    VersionMismatchError,
)
from .ingest import (
    TokenizationRules,
    build_corpus,
    read_corpus_dir,
    read_corpus_jsonl,
)
from .kb import WORD, KnowledgeBase, load_index, render_real, save_index
from .scl import ExitCriteria, apply_rules, watch_read
from .similarity import QueryScorer, combine, normalize, results_to_tsv

EXIT_UNREADABLE = 1
EXIT_MALFORMED = 2
EXIT_NO_DOCUMENTS = 3
EXIT_UNSCORABLE = 4
EXIT_UNKNOWN_ID = 5
EXIT_BAD_DEMO = 6


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _bool_flag(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {value!r}")


def _coords(value: str) -> tuple[int, int]:
    try:
        x, y = value.split(",")
        return (int(x), int(y))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {value!r}") from exc


def _load_kb(path: str) -> KnowledgeBase:
    return load_index(path)


def _read_doc(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text("utf-8")


def cmd_build(args: argparse.Namespace) -> int:
    rules = TokenizationRules(lowercase=args.lowercase, min_token_len=args.min_token_len)
    try:
        corpus_path = Path(args.corpus)
        if corpus_path.is_dir():
            docs = read_corpus_dir(args.corpus)
        else:
            docs = read_corpus_jsonl(args.corpus)
    except CorpusFormatError as exc:
        return _fail(EXIT_MALFORMED, f"malformed corpus: {exc}")
    except OSError as exc:
        return _fail(EXIT_UNREADABLE, f"cannot read corpus: {exc}")
    kb, skipped = build_corpus(docs, rules)
    for doc_id in skipped:
        print(f"skipping empty document {doc_id!r}", file=sys.stderr)
    if kb.article_count == 0:
        return _fail(EXIT_NO_DOCUMENTS, "no ingestable documents in the corpus")
    try:
        save_index(kb, args.index)
    except OSError as exc:
        return _fail(EXIT_UNREADABLE, f"cannot write index: {exc}")
    print(f"{kb.article_count} documents, {kb.word_count} words, {kb.total_tokens} tokens")
    return 0


def _open_index(args: argparse.Namespace) -> KnowledgeBase | int:
    try:
        return _load_kb(args.index)
    except (OSError, IndexFormatError, VersionMismatchError) as exc:
        return _fail(EXIT_UNREADABLE, f"cannot load index: {exc}")


def _apply_attention_file(kb: KnowledgeBase, path: str | None) -> int | None:
    if path is None:
        return None
    try:
        rules = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_UNREADABLE, f"cannot load attention rules: {exc}")
    if not isinstance(rules, dict) or not all(
        isinstance(v, (int, float)) for v in rules.values()
    ):
        return _fail(EXIT_UNREADABLE, "attention rules must map labels to numbers")
    _, unresolved = apply_rules(kb, rules)
    for label in unresolved:
        print(f"attention label {label!r} resolves to no node", file=sys.stderr)
    return None


def cmd_query(args: argparse.Namespace) -> int:
    kb = _open_index(args)
    if isinstance(kb, int):
        return kb
    failed = _apply_attention_file(kb, args.attention)
    if failed is not None:
        return failed
    try:
        text = _read_doc(args.doc)
    except OSError as exc:
        return _fail(EXIT_UNREADABLE, f"cannot read document: {exc}")
    try:
        if kb.article_count == 0:
            raise EmptyIndexError("the index holds no documents")
        scorer = QueryScorer(kb, text)
    except UnscorableQueryError as exc:
        return _fail(EXIT_UNSCORABLE, str(exc))
    except EmptyIndexError as exc:
        return _fail(EXIT_UNSCORABLE, str(exc))
    except McrxError as exc:
        return _fail(EXIT_UNSCORABLE, f"unscorable query: {exc}")

    if args.watch:
        labels = [label for label in args.watch.split(",") if label]
        try:
            values = watch_read(kb, labels, scorer.activation_pass)
        except UnknownLabelError as exc:
            return _fail(EXIT_UNKNOWN_ID, str(exc))
        for label in labels:
            print(f"watch\t{label}\t{render_real(values[label])}")

    results = [
        scorer.score(c) for c in scorer.candidates(args.candidates, not args.include_self)
    ]
    results.sort(key=lambda result: (-result.percent, result.label))
    results = results[: args.top]
    if args.tsv:
        if results:
            print(results_to_tsv(results))
    else:
        for position, result in enumerate(results, start=1):
            title = f"  {result.title}" if result.title != result.label else ""
            print(f"{position}\t{result.label}\t{result.percent:.1f}{title}")
    return 0


def _resolve_source(kb: KnowledgeBase, ref: str) -> int | str | None:
    """An ID|PATH argument: article label first, then readable file."""
    article_id = kb.article_id(ref)
    if article_id is not None:
        return article_id
    path = Path(ref)
    if path.is_file():
        return path.read_text("utf-8")
    return None


def _directional(kb, source, destination, attention, apply_destination_multiplier):
    emission = emit(kb, source)
    if isinstance(destination, int):
        bag = kb.article_bags[destination]
    else:
        bag = emit(kb, destination).bag
    value = collect_on_bag(kb, emission, bag, attention)
    if apply_destination_multiplier and isinstance(destination, int):
        value *= attention.get(destination, 1.0)
    return value


def cmd_compare(args: argparse.Namespace) -> int:
    kb = _open_index(args)
    if isinstance(kb, int):
        return kb
    side_a = _resolve_source(kb, args.a)
    side_b = _resolve_source(kb, args.b)
    if side_a is None:
        return _fail(EXIT_UNKNOWN_ID, f"unknown id or unreadable file {args.a!r}")
    if side_b is None:
        return _fail(EXIT_UNKNOWN_ID, f"unknown id or unreadable file {args.b!r}")
    attention = kb.attention_snapshot()
    try:
        forward = _directional(kb, side_a, side_b, attention, True)
        reverse = _directional(kb, side_b, side_a, attention, False)
        emission_a = emit(kb, side_a)
        self_activation = collect_on_bag(kb, emission_a, emission_a.bag, attention)
        raw = combine(reverse, forward)
        percent = normalize(raw, combine(self_activation, self_activation))
    except McrxError as exc:
        return _fail(EXIT_UNSCORABLE, str(exc))
    print(f"T {args.a}->{args.b}\t{forward:.5f}")
    print(f"S {args.b}->{args.a}\t{reverse:.5f}")
    print(f"raw\t{raw:.5f}")
    print(f"percent\t{percent:.1f}")
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    kb = _open_index(args)
    if isinstance(kb, int):
        return kb
    source = _resolve_source(kb, args.source)
    if source is None:
        return _fail(EXIT_UNKNOWN_ID, f"unknown id or unreadable file {args.source!r}")
    destination = kb.article_id(args.dest)
    if destination is None:
        return _fail(EXIT_UNKNOWN_ID, f"unknown article id {args.dest!r}")
    level = {"sentence": 1, "paragraph": 2}[args.level]
    try:
        entries = trace_op(kb, source, destination, level, args.top)
    except McrxError as exc:
        return _fail(EXIT_UNSCORABLE, str(exc))
    for position, entry in enumerate(entries, start=1):
        print(f"{position}\t{entry.node_id}\t{entry.contribution:.5f}\t{_node_text(kb, entry.node_id)}")
    return 0


def _node_text(kb: KnowledgeBase, node_id: int) -> str:
    node = kb.nodes[node_id]
    if node.level == WORD:
        return node.label or ""
    parts = []
    for child_id, count in node.children:
        parts.extend([_node_text(kb, child_id)] * count)
    return " ".join(parts)


def cmd_scl_demo(args: argparse.Namespace) -> int:
    kb_path = Path(args.kb)
    changed = False
    if kb_path.exists():
        try:
            akb = seqdemo.load_actions(args.kb)
        except (OSError, IndexFormatError) as exc:
            return _fail(EXIT_UNREADABLE, f"cannot load action kb: {exc}")
    else:
        akb = seqdemo.default_actions()
        changed = True

    if args.learn:
        try:
            states = _read_demo(args.learn)
        except OSError as exc:
            return _fail(EXIT_UNREADABLE, f"cannot read demonstration: {exc}")
        except InvalidDemonstrationError as exc:
            return _fail(EXIT_BAD_DEMO, f"invalid demonstration: {exc}")
        try:
            learned = seqdemo.learn_demonstration(akb, states)
        except InvalidDemonstrationError as exc:
            return _fail(EXIT_BAD_DEMO, f"invalid demonstration: {exc}")
        for label in learned.new_primitives:
            print(f"learned primitive {label}")
            changed = True
        if learned.composite_created:
            print(f"learned composite {learned.composite_id}")
            changed = True
        else:
            print(f"recognized composite {learned.composite_id}")

    try:
        budget = ExitCriteria(max_iterations=args.max_iter, score_threshold=100.0)
    except ValueError as exc:
        return _fail(EXIT_UNREADABLE, str(exc))
    result = seqdemo.solve(akb, args.start, args.target, budget)
    sequence = " ".join(result.sequence) if result.sequence else "(empty)"
    print(f"sequence\t{sequence}")
    print(f"iterations\t{result.report.iterations}")
    print(f"exit\t{result.report.exit_reason}")
    if result.composite_id is not None:
        verb = "registered" if result.composite_created else "matched"
        print(f"{verb} composite {result.composite_id}")
        changed = changed or result.composite_created
    if changed:
        try:
            seqdemo.save_actions(akb, args.kb)
        except OSError as exc:
            return _fail(EXIT_UNREADABLE, f"cannot write action kb: {exc}")
    return 0


def _read_demo(path: str) -> list[tuple[int, int]]:
    states = []
    for line_no, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            x, y = stripped.split(",")
            states.append((int(x), int(y)))
        except ValueError as exc:
            raise InvalidDemonstrationError(
                f"line {line_no}: expected X,Y, got {stripped!r}"
            ) from exc
    return states


def cmd_stats(args: argparse.Namespace) -> int:
    kb = _open_index(args)
    if isinstance(kb, int):
        return kb
    weights = [
        node.weight for node in kb.nodes if node.level == WORD and kb.df.get(node.id)
    ]
    print(f"documents: {kb.article_count}")
    print(f"words: {kb.word_count}")
    print(f"tokens: {kb.total_tokens}")
    if weights:
        print(f"weight min: {min(weights):.5f}")
        print(f"weight max: {max(weights):.5f}")
        print(f"weight mean: {sum(weights) / len(weights):.5f}")
    else:
        print("weight min: n/a")
        print("weight max: n/a")
        print("weight mean: n/a")
    for level, name in enumerate(kb.levels):
        print(f"nodes[{name}]: {kb.level_counts[level]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcrx",
        description="Corpus indexing and asymmetric document similarity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="index a corpus directory or JSONL file")
    p_build.add_argument("--corpus", required=True)
    p_build.add_argument("--index", required=True)
    p_build.add_argument("--lowercase", type=_bool_flag, default=True)
    p_build.add_argument("--min-token-len", type=int, default=1)
    p_build.set_defaults(handler=cmd_build)

    p_query = sub.add_parser("query", help="rank index documents against a query")
    p_query.add_argument("--index", required=True)
    p_query.add_argument("--doc", required=True, help="query file, or - for stdin")
    p_query.add_argument("--top", type=int, default=10)
    p_query.add_argument("--candidates", type=int, default=100)
    p_query.add_argument("--include-self", action="store_true")
    p_query.add_argument("--attention", default=None, help="JSON label->multiplier file")
    p_query.add_argument("--watch", default=None, help="comma-separated labels")
    p_query.add_argument("--tsv", action="store_true")
    p_query.set_defaults(handler=cmd_query)

    p_compare = sub.add_parser("compare", help="directional activations of two sources")
    p_compare.add_argument("--index", required=True)
    p_compare.add_argument("--a", required=True, help="article id or file path")
    p_compare.add_argument("--b", required=True, help="article id or file path")
    p_compare.set_defaults(handler=cmd_compare)

    p_trace = sub.add_parser("trace", help="per-node contributions inside a document")
    p_trace.add_argument("--index", required=True)
    p_trace.add_argument("--source", required=True, help="article id or file path")
    p_trace.add_argument("--dest", required=True, help="article id")
    p_trace.add_argument("--level", required=True, choices=("sentence", "paragraph"))
    p_trace.add_argument("--top", type=int, default=5)
    p_trace.set_defaults(handler=cmd_trace)

    p_demo = sub.add_parser("scl-demo", help="grid-world action learning and planning")
    p_demo.add_argument("--kb", required=True, help="action kb file (created if absent)")
    p_demo.add_argument("--learn", default=None, help="demonstration file, one X,Y per line")
    p_demo.add_argument("--start", required=True, type=_coords)
    p_demo.add_argument("--target", required=True, type=_coords)
    p_demo.add_argument("--max-iter", type=int, default=10000)
    p_demo.set_defaults(handler=cmd_scl_demo)

    p_stats = sub.add_parser("stats", help="summarize an index")
    p_stats.add_argument("--index", required=True)
    p_stats.set_defaults(handler=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
