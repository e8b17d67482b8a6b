"""Command line interface: index, retrieve, answer, eval, stats.

Exit codes: 0 success, 1 partial failure (report still written), 2 failed
precondition (missing files, bad config).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AppConfig, load_app_config
from .corpus import load_corpus
from .errors import HyperhopError
from .evaluate import load_qa_dataset, run_eval
from .hypergraph import graph_stats
from .index_store import load_index
from .pipeline import (
    answer_template,
    build_index_from_corpus,
    make_chat,
    make_encoder,
    make_extractor,
)
from .qa import answer as generate_answer
from .retrieval import retrieve

_FLAG_SETTINGS = (
    "corpus",
    "index_dir",
    "cache_dir",
    "offline",
    "api_base",
    "api_key",
    "embed_model",
    "embed_dim",
    "chat_model",
    "batch_size",
    "max_workers",
    "offline_dim",
    "extraction_prompt",
    "answer_prompt",
    "eta",
    "beta",
    "k1",
    "k2",
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--corpus", help="corpus JSONL path")
    parser.add_argument("--index-dir", dest="index_dir", help="index directory")
    parser.add_argument("--cache-dir", dest="cache_dir", help="cache directory")
    parser.add_argument("--offline", action="store_true", default=None,
                        help="run without any network access")
    parser.add_argument("--api-base", dest="api_base", help="OpenAI-compatible base URL")
    parser.add_argument("--api-key", dest="api_key", help="API key")
    parser.add_argument("--embed-model", dest="embed_model", help="remote embedding model id")
    parser.add_argument("--embed-dim", dest="embed_dim", type=int, help="remote embedding dim")
    parser.add_argument("--chat-model", dest="chat_model", help="remote chat model id")
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--max-workers", dest="max_workers", type=int)
    parser.add_argument("--offline-dim", dest="offline_dim", type=int,
                        help="offline encoder dimension")
    parser.add_argument("--extraction-prompt", dest="extraction_prompt",
                        help="override extraction prompt template file")
    parser.add_argument("--answer-prompt", dest="answer_prompt",
                        help="override answer prompt template file")


def _add_retrieval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eta", type=float, help="entity similarity threshold")
    parser.add_argument("--beta", type=float, help="semantic enhancement blend")
    parser.add_argument("--t", dest="steps", type=int, help="diffusion steps")
    parser.add_argument("--k1", type=int, help="seed set size")
    parser.add_argument("--k2", type=int, help="candidate set size")
    parser.add_argument("--no-weights", dest="use_weight_matrix", action="store_false",
                        default=None, help="ablation: identity hyperedge weights")
    parser.add_argument("--no-se", dest="use_semantic_enhancement", action="store_false",
                        default=None, help="ablation: skip semantic enhancement")
    parser.add_argument("--no-struct", dest="use_structural_enhancement", action="store_false",
                        default=None, help="ablation: fixed top-k1 selection")


def _config_from_args(args: argparse.Namespace) -> AppConfig:
    flags = {name: getattr(args, name, None) for name in _FLAG_SETTINGS}
    for name in ("steps", "use_weight_matrix", "use_semantic_enhancement",
                 "use_structural_enhancement"):
        flags[name] = getattr(args, name, None)
    return load_app_config(flags, config_file=args.config)


def _load_index_or_fail(config: AppConfig):
    index_dir = Path(config.require("index_dir"))
    return load_index(index_dir)


def cmd_index(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    _, manifest = build_index_from_corpus(config)
    print(json.dumps(manifest, sort_keys=True, indent=2))
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    index = _load_index_or_fail(config)
    result = retrieve(
        args.query,
        index,
        config.retrieval,
        make_encoder(config),
        make_extractor(config),
    )
    k2 = min(config.retrieval.k2, index.n_passages)
    print(json.dumps(result.to_payload(args.query, index.passage_ids, k2), indent=2))
    return 0


def cmd_answer(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    index = _load_index_or_fail(config)
    passages = {p.id: p for p in load_corpus(config.require("corpus"))}
    result = retrieve(
        args.query,
        index,
        config.retrieval,
        make_encoder(config),
        make_extractor(config),
    )
    context = [passages[index.passage_ids[col]] for col, _ in result.selected]
    reply = generate_answer(args.query, context, make_chat(config), answer_template(config))
    print(
        json.dumps(
            {
                "query": args.query,
                "answer": reply,
                "passages": [p.id for p in context],
            },
            indent=2,
        )
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    index = _load_index_or_fail(config)
    dataset = load_qa_dataset(args.dataset)
    chat = make_chat(config) if args.qa else None
    passages = load_corpus(config.require("corpus")) if args.qa else None
    report = run_eval(
        dataset,
        index,
        config.retrieval,
        make_encoder(config),
        make_extractor(config),
        chat=chat,
        passages=passages,
        answer_template=answer_template(config),
        max_workers=config.max_workers,
    )
    rendered = report.to_json(include_timing=args.timing)
    if args.output:
        Path(args.output).write_text(rendered, encoding="utf-8")
    else:
        print(rendered, end="")
    print(report.to_table(include_timing=args.timing), file=sys.stderr, end="")
    return 1 if report.errors else 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    index = _load_index_or_fail(config)
    report = graph_stats(index.incidence, index.degrees)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperhop",
        description="Entity-hypergraph diffusion retrieval for multi-hop QA",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build and persist the retrieval index")
    _add_common_flags(p_index)
    p_index.set_defaults(func=cmd_index)

    p_retrieve = sub.add_parser("retrieve", help="rank passages for a query")
    p_retrieve.add_argument("query")
    _add_common_flags(p_retrieve)
    _add_retrieval_flags(p_retrieve)
    p_retrieve.set_defaults(func=cmd_retrieve)

    p_answer = sub.add_parser("answer", help="retrieve then answer a query")
    p_answer.add_argument("query")
    _add_common_flags(p_answer)
    _add_retrieval_flags(p_answer)
    p_answer.set_defaults(func=cmd_answer)

    p_eval = sub.add_parser("eval", help="score retrieval (and QA) on a dataset")
    p_eval.add_argument("--dataset", required=True, help="JSONL QA dataset")
    p_eval.add_argument("--output", help="write the JSON report here instead of stdout")
    p_eval.add_argument("--qa", action="store_true", help="also score generated answers")
    p_eval.add_argument("--timing", action="store_true",
                        help="include wall-clock timing in the report")
    _add_common_flags(p_eval)
    _add_retrieval_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_stats = sub.add_parser("stats", help="print graph-scale statistics")
    _add_common_flags(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HyperhopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
