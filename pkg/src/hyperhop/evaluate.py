"""Evaluation harness: retrieval scoring, optional QA scoring, timing.

The retrieval timer wraps only the diffusion-plus-enhancement core; encoder
and LLM calls stay outside the measured region. Timing fields are excluded
from the serialized report by default so that repeated offline runs produce
byte-identical output.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Passage
from .embeddings import EncoderClient
from .entities import ExtractionClient
from .errors import CorpusFormatError
from .index_store import HypergraphIndex
from .metrics import exact_match, hit_at_k, recall_at_k, token_f1
from .qa import ChatClient, answer
from .retrieval import RetrievalConfig, build_entity_similarity, build_passage_similarity, rank_passages

RECALL_KS = (5, 10)


@dataclass(frozen=True)
class QAExample:
    question: str
    gold_answers: tuple[str, ...]
    gold_passage_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.gold_answers:
            raise CorpusFormatError(f"example {self.question!r} has no gold answers")


def load_qa_dataset(path: str | Path) -> list[QAExample]:
    """JSONL loader: {question, answers: [...], gold_passage_ids: [...]}."""
    examples = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            try:
                examples.append(
                    QAExample(
                        question=obj["question"],
                        gold_answers=tuple(obj["answers"]),
                        gold_passage_ids=tuple(obj.get("gold_passage_ids", [])),
                    )
                )
            except KeyError as exc:
                raise CorpusFormatError(f"missing key {exc.args[0]!r}", line=lineno) from exc
    return examples


@dataclass
class ExampleRecord:
    question: str
    selected_ids: list[str]
    selected_size: int
    recall: dict[int, float]
    hits: dict[int, int]
    em: int | None = None
    f1: float | None = None
    prediction: str | None = None
    retrieval_seconds: float = 0.0
    dense_fallback: bool = False
    error: str | None = None

    def to_dict(self, include_timing: bool) -> dict:
        payload = {
            "question": self.question,
            "selected_ids": self.selected_ids,
            "selected_size": self.selected_size,
            "recall": {f"recall@{k}": v for k, v in sorted(self.recall.items())},
            "hits": {f"hit@{k}": v for k, v in sorted(self.hits.items())},
            "dense_fallback": self.dense_fallback,
        }
        if self.prediction is not None:
            payload["prediction"] = self.prediction
            payload["em"] = self.em
            payload["f1"] = self.f1
        if self.error is not None:
            payload["error"] = self.error
        if include_timing:
            payload["retrieval_seconds"] = self.retrieval_seconds
        return payload


@dataclass
class EvalReport:
    records: list[ExampleRecord]
    config: RetrievalConfig
    qa_scored: bool
    errors: int = 0

    @property
    def aggregates(self) -> dict:
        scored = [r for r in self.records if r.error is None]
        n = len(scored)
        agg: dict = {"examples": len(self.records), "scored": n, "errors": self.errors}
        if n == 0:
            return agg
        for k in RECALL_KS:
            agg[f"recall@{k}"] = sum(r.recall[k] for r in scored) / n
            agg[f"hit@{k}"] = sum(r.hits[k] for r in scored) / n
        agg["mean_selected_size"] = sum(r.selected_size for r in scored) / n
        agg["dense_fallbacks"] = sum(r.dense_fallback for r in scored)
        if self.qa_scored:
            agg["em"] = sum(r.em for r in scored) / n
            agg["f1"] = sum(r.f1 for r in scored) / n
        return agg

    @property
    def total_retrieval_seconds(self) -> float:
        return sum(r.retrieval_seconds for r in self.records)

    def to_json(self, include_timing: bool = False) -> str:
        payload = {
            "aggregates": self.aggregates,
            "config": {
                "eta": self.config.eta,
                "beta": self.config.beta,
                "steps": self.config.steps,
                "k1": self.config.k1,
                "k2": self.config.k2,
                "use_weight_matrix": self.config.use_weight_matrix,
                "use_semantic_enhancement": self.config.use_semantic_enhancement,
                "use_structural_enhancement": self.config.use_structural_enhancement,
            },
            "records": [r.to_dict(include_timing) for r in self.records],
        }
        if include_timing:
            payload["total_retrieval_seconds"] = self.total_retrieval_seconds
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_table(self, include_timing: bool = False) -> str:
        agg = self.aggregates
        rows = [("examples", agg["examples"]), ("errors", agg["errors"])]
        for k in RECALL_KS:
            if f"recall@{k}" in agg:
                rows.append((f"recall@{k}", f"{agg[f'recall@{k}']:.4f}"))
                rows.append((f"hit@{k}", f"{agg[f'hit@{k}']:.4f}"))
        if "mean_selected_size" in agg:
            rows.append(("mean |C_q|", f"{agg['mean_selected_size']:.2f}"))
        if self.qa_scored and "em" in agg:
            rows.append(("em", f"{agg['em']:.4f}"))
            rows.append(("f1", f"{agg['f1']:.4f}"))
        if include_timing:
            rows.append(("retrieval seconds", f"{self.total_retrieval_seconds:.3f}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows) + "\n"


def _evaluate_one(
    example: QAExample,
    index: HypergraphIndex,
    known_ids: set[str],
    config: RetrievalConfig,
    encoder: EncoderClient,
    extractor: ExtractionClient,
    chat: ChatClient | None,
    passages_by_id: dict[str, Passage] | None,
    answer_template: str | None,
) -> ExampleRecord:
    missing = [pid for pid in example.gold_passage_ids if pid not in known_ids]
    if missing or not example.gold_passage_ids:
        reason = (
            f"gold passage ids missing from index: {missing}"
            if missing
            else "example has no gold passage ids"
        )
        return ExampleRecord(
            question=example.question,
            selected_ids=[],
            selected_size=0,
            recall={k: 0.0 for k in RECALL_KS},
            hits={k: 0 for k in RECALL_KS},
            error=reason,
        )

    warnings: list[str] = []
    x = build_entity_similarity(example.question, index, encoder, extractor, config.eta, warnings)
    p = build_passage_similarity(example.question, index, encoder)
    start = time.perf_counter()
    result = rank_passages(x, p, index, config, ranking_depth=max(RECALL_KS))
    elapsed = time.perf_counter() - start

    ranked_ids = [index.passage_ids[col] for col, _ in result.ranking]
    selected_ids = [index.passage_ids[col] for col, _ in result.selected]
    record = ExampleRecord(
        question=example.question,
        selected_ids=selected_ids,
        selected_size=len(selected_ids),
        recall={k: recall_at_k(ranked_ids, example.gold_passage_ids, k) for k in RECALL_KS},
        hits={k: hit_at_k(ranked_ids, example.gold_passage_ids, k) for k in RECALL_KS},
        retrieval_seconds=elapsed,
        dense_fallback=result.diagnostics.dense_fallback,
    )
    if chat is not None and passages_by_id is not None:
        context = [passages_by_id[pid] for pid in selected_ids if pid in passages_by_id]
        record.prediction = answer(example.question, context, chat, answer_template)
        record.em = exact_match(record.prediction, example.gold_answers)
        record.f1 = token_f1(record.prediction, example.gold_answers)
    return record


def run_eval(
    dataset: Sequence[QAExample],
    index: HypergraphIndex,
    config: RetrievalConfig,
    encoder: EncoderClient,
    extractor: ExtractionClient,
    chat: ChatClient | None = None,
    passages: Sequence[Passage] | None = None,
    answer_template: str | None = None,
    max_workers: int = 1,
) -> EvalReport:
    """Evaluate retrieval (and QA when a chat client is given) over a dataset.

    Per-example failures (for example gold ids absent from the index) are
    recorded and evaluation continues.
    """
    passages_by_id = {p.id: p for p in passages} if passages is not None else None
    if chat is not None and passages_by_id is None:
        raise CorpusFormatError("QA scoring requires the corpus passages")
    known_ids = set(index.passage_ids)

    def work(example: QAExample) -> ExampleRecord:
        return _evaluate_one(
            example, index, known_ids, config, encoder, extractor, chat,
            passages_by_id, answer_template,
        )

    if max_workers <= 1:
        records = [work(ex) for ex in dataset]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(work, dataset))
    errors = sum(1 for r in records if r.error is not None)
    return EvalReport(records=records, config=config, qa_scored=chat is not None, errors=errors)
