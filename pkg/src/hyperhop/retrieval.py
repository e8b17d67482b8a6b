"""Query-time retrieval pipeline.

Per query: build an entity similarity vector x (thresholded max cosine of
query entities against catalog entities) and a passage similarity vector p
(query text against passage texts); diffuse x through the passage-weighted
hypergraph for t steps; blend the diffused passage relevance with p
(semantic enhancement); then select a dynamic-size passage set that keeps
the top-k1 seeds plus any top-k2 passage sharing an entity with a seed
(structural enhancement).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import (
    EmbeddingMatrix,
    EncoderClient,
    cosine_against_rows,
    embed_batch,
    max_sim_to_query_entities,
)
from .entities import ExtractionClient, dedup_normalized
from .errors import ContractError, IndexIntegrityError
from .hypergraph import apply_diffusion_operator, entity_to_passage
from .index_store import HypergraphIndex


@dataclass
class RetrievalConfig:
    """Hyperparameters and ablation switches for the retrieval pipeline."""

    eta: float = 0.8
    beta: float = 0.5
    steps: int = 4
    k1: int = 5
    k2: int = 10
    use_weight_matrix: bool = True
    use_semantic_enhancement: bool = True
    use_structural_enhancement: bool = True

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ContractError(f"eta must be in [0, 1], got {self.eta}")
        if not 0.0 <= self.beta <= 1.0:
            raise ContractError(f"beta must be in [0, 1], got {self.beta}")
        if self.steps < 0:
            raise ContractError(f"steps must be >= 0, got {self.steps}")
        if not 1 <= self.k1 <= self.k2:
            raise ContractError(f"need 1 <= k1 <= k2, got k1={self.k1}, k2={self.k2}")


@dataclass
class QueryArtifacts:
    """Intermediate vectors of one retrieval, kept for inspection and tests."""

    x: np.ndarray  # entity similarity, length n_entities
    p: np.ndarray  # raw passage cosines, length n_passages
    p_t: np.ndarray  # diffused passage relevance
    p_tilde: np.ndarray  # enhanced relevance used for ranking


@dataclass
class Diagnostics:
    nonzero_entity_count: int = 0
    steps_run: int = 0
    dense_fallback: bool = False
    k1_effective: int = 0
    k2_effective: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "nonzero_entity_count": self.nonzero_entity_count,
            "steps_run": self.steps_run,
            "dense_fallback": self.dense_fallback,
            "k1_effective": self.k1_effective,
            "k2_effective": self.k2_effective,
            "warnings": list(self.warnings),
        }


@dataclass
class RankedResult:
    """Ranked passages plus the dynamic selected set for one query.

    ``ranking`` holds the top-R columns by score (R >= k2), non-increasing,
    ties broken by ascending column index; ``selected`` is an ordered subset
    of the top-k2 prefix.
    """

    ranking: list[tuple[int, float]]
    selected: list[tuple[int, float]]
    diagnostics: Diagnostics
    artifacts: QueryArtifacts | None = None

    def to_payload(self, query: str, passage_ids: Sequence[str], k2: int) -> dict:
        def entries(pairs):
            return [{"id": passage_ids[col], "score": score} for col, score in pairs]

        return {
            "query": query,
            "selected": entries(self.selected),
            "topk2": entries(self.ranking[:k2]),
            "diagnostics": self.diagnostics.to_dict(),
        }


def ranked_order(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ties by ascending index."""
    n = scores.shape[0]
    return np.lexsort((np.arange(n), -scores))


def build_entity_similarity(
    query: str,
    index: HypergraphIndex,
    encoder: EncoderClient,
    extractor: ExtractionClient,
    eta: float,
    warnings: list[str] | None = None,
) -> np.ndarray:
    """Thresholded max-cosine vector of query entities vs catalog entities.

    x_i = v_i when v_i > eta (strict), else 0. Extraction failures degrade
    to an all-zero vector with a warning rather than a hard error.
    """
    n_entities = index.n_entities
    if index.entity_embeddings is None:
        raise IndexIntegrityError("index has no entity embeddings")
    try:
        raw = extractor.extract("", query)
    except Exception as exc:
        if warnings is not None:
            warnings.append(f"query entity extraction failed: {exc}")
        return np.zeros(n_entities, dtype=np.float64)
    query_entities = dedup_normalized(raw)
    if not query_entities:
        return np.zeros(n_entities, dtype=np.float64)
    query_rows = embed_batch(query_entities, encoder)
    corpus_rows = EmbeddingMatrix(values=index.entity_embeddings, row_keys=list(index.catalog))
    v = max_sim_to_query_entities(query_rows, corpus_rows)
    return np.where(v > eta, v, 0.0)


def build_passage_similarity(
    query: str, index: HypergraphIndex, encoder: EncoderClient
) -> np.ndarray:
    """Raw cosine of the query against every passage embedding."""
    if index.passage_embeddings is None:
        raise IndexIntegrityError("index has no passage embeddings")
    if index.passage_embeddings.shape[0] != index.n_passages:
        raise IndexIntegrityError("passage embedding rows disagree with column count")
    query_vec = embed_batch([query], encoder).values[0]
    return cosine_against_rows(query_vec, index.passage_embeddings)


def diffuse(
    x: np.ndarray,
    p: np.ndarray,
    index: HypergraphIndex,
    steps: int,
    use_weight_matrix: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """t diffusion steps from x, then one entity-to-passage hop.

    The hyperedge weights are the clamped passage similarities (or all ones
    when the weight matrix is ablated); there is no renormalization between
    steps. Returns (x_t, p_t) with p_t = W H^T x_t.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (index.n_passages,):
        raise ContractError(f"p has shape {p.shape}, expected ({index.n_passages},)")
    if steps < 0:
        raise ContractError("steps must be >= 0")
    if use_weight_matrix:
        weights = np.clip(p, 0.0, 1.0)
    else:
        weights = np.ones(index.n_passages, dtype=np.float64)
    x_t = x
    for _ in range(steps):
        x_t = apply_diffusion_operator(x_t, index.incidence, index.degrees, weights)
    p_t = weights * entity_to_passage(x_t, index.incidence)
    return x_t, p_t


def semantic_enhance(
    p_t: np.ndarray, p: np.ndarray, beta: float, enabled: bool = True
) -> np.ndarray:
    """Residual blend (1 - beta) * p_t + beta * p; identity when disabled."""
    p_t = np.asarray(p_t, dtype=np.float64)
    if not enabled:
        return p_t
    p = np.asarray(p, dtype=np.float64)
    if p_t.shape != p.shape:
        raise ContractError(f"shape mismatch: {p_t.shape} vs {p.shape}")
    if not 0.0 <= beta <= 1.0:
        raise ContractError(f"beta must be in [0, 1], got {beta}")
    return (1.0 - beta) * p_t + beta * p


def shared_entity_counts(
    index: HypergraphIndex, seed_columns: np.ndarray, candidate_columns: np.ndarray
) -> np.ndarray:
    """For each candidate passage, entities shared with the seed set.

    Sparse evaluation of (H^T H h)[candidates] for h the seed indicator:
    accumulate per-entity hit counts from the seed columns, then sum hits
    over each candidate's entities. Counts multiplicity.
    """
    inc = index.incidence
    hits = np.zeros(inc.n_entities, dtype=np.int64)
    for col in seed_columns:
        rows = inc.pas_indices[inc.pas_offsets[col] : inc.pas_offsets[col + 1]]
        hits[rows] += 1
    counts = np.empty(candidate_columns.shape[0], dtype=np.int64)
    for k, col in enumerate(candidate_columns):
        rows = inc.pas_indices[inc.pas_offsets[col] : inc.pas_offsets[col + 1]]
        counts[k] = hits[rows].sum()
    return counts


def structural_enhance(
    p_tilde: np.ndarray, index: HypergraphIndex, k1: int, k2: int
) -> np.ndarray:
    """Dynamic-size selection: top-k1 seeds plus entity-sharing top-k2 rest.

    Returns selected columns ordered by descending score (ties by ascending
    index). Seeds are always retained, so k1 <= |selection| <= k2.
    """
    n = index.n_passages
    if not 1 <= k1 <= k2:
        raise ContractError(f"need 1 <= k1 <= k2, got k1={k1}, k2={k2}")
    if k1 > n:
        raise ContractError(f"k1={k1} exceeds passage count {n}")
    if k2 > n:
        raise ContractError(f"k2={k2} exceeds passage count {n}")
    if p_tilde.shape != (n,):
        raise ContractError(f"p_tilde has shape {p_tilde.shape}, expected ({n},)")
    order = ranked_order(np.asarray(p_tilde, dtype=np.float64))
    seeds = order[:k1]
    candidates = order[k1:k2]
    shares = shared_entity_counts(index, seeds, candidates)
    return np.concatenate([seeds, candidates[shares > 0]])


def rank_passages(
    x: np.ndarray,
    p: np.ndarray,
    index: HypergraphIndex,
    config: RetrievalConfig,
    ranking_depth: int | None = None,
) -> RankedResult:
    """Core ranking given prebuilt similarity vectors (no encoder calls).

    This is the diffusion-plus-enhancement stage that evaluation timing
    wraps. When x is all zero the diffusion is skipped and passages are
    ranked by p alone (recorded as a dense fallback in diagnostics).
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    n = index.n_passages
    diag = Diagnostics(nonzero_entity_count=int(np.count_nonzero(x)))
    if n == 0:
        diag.warnings.append("empty corpus: nothing to rank")
        empty = QueryArtifacts(x=x, p=p, p_t=np.zeros(0), p_tilde=np.zeros(0))
        return RankedResult(ranking=[], selected=[], diagnostics=diag, artifacts=empty)
    k1 = min(config.k1, n)
    k2 = min(config.k2, n)
    if (k1, k2) != (config.k1, config.k2):
        diag.warnings.append(
            f"k range clamped to corpus size: k1={k1}, k2={k2} (corpus has {n} passages)"
        )
    diag.k1_effective, diag.k2_effective = k1, k2

    if diag.nonzero_entity_count == 0:
        diag.dense_fallback = True
        p_t = np.zeros(n, dtype=np.float64)
        scores = p
    else:
        _, p_t = diffuse(x, p, index, config.steps, config.use_weight_matrix)
        diag.steps_run = config.steps
        scores = semantic_enhance(p_t, p, config.beta, config.use_semantic_enhancement)

    artifacts = QueryArtifacts(x=x, p=p, p_t=p_t, p_tilde=scores)
    depth = max(k2, ranking_depth or 0)
    order = ranked_order(scores)
    ranking = [(int(col), float(scores[col])) for col in order[:depth]]
    if config.use_structural_enhancement:
        selected_cols = structural_enhance(scores, index, k1, k2)
    else:
        selected_cols = order[:k1]
    selected = [(int(col), float(scores[col])) for col in selected_cols]
    return RankedResult(ranking=ranking, selected=selected, diagnostics=diag, artifacts=artifacts)


def retrieve(
    query: str,
    index: HypergraphIndex,
    config: RetrievalConfig,
    encoder: EncoderClient,
    extractor: ExtractionClient,
    ranking_depth: int | None = None,
) -> RankedResult:
    """Full pipeline: similarity vectors, diffusion, enhancement, selection."""
    warnings: list[str] = []
    x = build_entity_similarity(query, index, encoder, extractor, config.eta, warnings)
    p = build_passage_similarity(query, index, encoder)
    result = rank_passages(x, p, index, config, ranking_depth)
    result.diagnostics.warnings = warnings + result.diagnostics.warnings
    return result
