"""Sparse entity-passage incidence structure and the diffusion operator.

The hypergraph stores a binary incidence matrix H (entities x passages) in
two compressed orientations so that both propagation directions are linear
scans over contiguous arrays:

* entity-major: for entity i, ``ent_indices[ent_offsets[i]:ent_offsets[i+1]]``
  lists the passages containing i;
* passage-major: for passage j, ``pas_indices[pas_offsets[j]:pas_offsets[j+1]]``
  lists the entities of j.

The diffusion operator applies the passage-weighted symmetric normalized
propagation matrix

    D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}

to an entity vector without ever materializing a matrix. Hyperedges with
zero degree use the pseudo-inverse convention 1/0 := 0, so entityless
passages are inert under diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entities import EntityCatalog, EntitySet
from .errors import ContractError


@dataclass
class IncidenceMatrix:
    """Binary incidence matrix in dual compressed form.

    Both orientations describe the same set of (entity, passage) pairs;
    ``validate`` cross-checks them.
    """

    n_entities: int
    n_passages: int
    ent_offsets: np.ndarray  # int32, len n_entities + 1
    ent_indices: np.ndarray  # int32, len nnz, passage column per entry
    pas_offsets: np.ndarray  # int32, len n_passages + 1
    pas_indices: np.ndarray  # int32, len nnz, entity row per entry

    @property
    def nnz(self) -> int:
        return int(self.ent_indices.shape[0])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_entities, self.n_passages), dtype=np.float64)
        for j in range(self.n_passages):
            rows = self.pas_indices[self.pas_offsets[j] : self.pas_offsets[j + 1]]
            dense[rows, j] = 1.0
        return dense

    def validate(self) -> None:
        if self.ent_offsets.shape != (self.n_entities + 1,):
            raise ContractError("entity offsets length mismatch")
        if self.pas_offsets.shape != (self.n_passages + 1,):
            raise ContractError("passage offsets length mismatch")
        if self.ent_indices.shape[0] != self.pas_indices.shape[0]:
            raise ContractError("orientations disagree on nnz")
        from_ent = set(zip(_expand_rows(self.ent_offsets), self.ent_indices.tolist()))
        from_pas = set(zip(self.pas_indices.tolist(), _expand_rows(self.pas_offsets)))
        if len(from_ent) != self.nnz or from_ent != from_pas:
            raise ContractError("orientations describe different (i, j) sets")


def _expand_rows(offsets: np.ndarray) -> list[int]:
    return np.repeat(np.arange(len(offsets) - 1), np.diff(offsets)).tolist()


@dataclass(eq=False)
class DegreeVectors:
    """Integer node and hyperedge degrees, with cached float reciprocals.

    Reciprocals are computed once to avoid drift between repeated
    applications of the operator.
    """

    node_degrees: np.ndarray  # int64, len n_entities, row sums of H
    edge_degrees: np.ndarray  # int64, len n_passages, column sums of H
    _inv_sqrt_node: np.ndarray | None = field(default=None, repr=False)
    _inv_edge: np.ndarray | None = field(default=None, repr=False)

    @property
    def inv_sqrt_node(self) -> np.ndarray:
        if self._inv_sqrt_node is None:
            deg = self.node_degrees.astype(np.float64)
            with np.errstate(divide="ignore"):
                inv = 1.0 / np.sqrt(deg)
            inv[deg == 0] = 0.0
            self._inv_sqrt_node = inv
        return self._inv_sqrt_node

    @property
    def inv_edge(self) -> np.ndarray:
        if self._inv_edge is None:
            deg = self.edge_degrees.astype(np.float64)
            with np.errstate(divide="ignore"):
                inv = 1.0 / deg
            inv[deg == 0] = 0.0  # entityless passages stay inert
            self._inv_edge = inv
        return self._inv_edge


def build_incidence(entity_sets: Sequence[EntitySet], catalog: EntityCatalog) -> IncidenceMatrix:
    """Build H from per-passage entity sets, columns in the given order.

    Every entity must already be cataloged; a missing entity indicates an
    inconsistent build and raises ContractError.
    """
    n_passages = len(entity_sets)
    n_entities = len(catalog)
    edge_degrees = np.zeros(n_passages, dtype=np.int64)
    rows_chunks: list[np.ndarray] = []
    for j, es in enumerate(entity_sets):
        try:
            rows = np.array([catalog.index_of(e) for e in es.entities], dtype=np.int32)
        except KeyError as exc:
            raise ContractError(f"passage {es.passage_id!r}: {exc.args[0]}") from exc
        edge_degrees[j] = rows.shape[0]
        rows_chunks.append(rows)

    pas_indices = (
        np.concatenate(rows_chunks) if rows_chunks else np.empty(0, dtype=np.int32)
    ).astype(np.int32)
    pas_offsets = np.zeros(n_passages + 1, dtype=np.int32)
    np.cumsum(edge_degrees, out=pas_offsets[1:])

    # Transpose to entity-major via a stable counting sort over rows; the
    # passage-major data is already in ascending column order, so columns
    # stay sorted within each entity row.
    node_degrees = np.bincount(pas_indices, minlength=n_entities).astype(np.int64)
    ent_offsets = np.zeros(n_entities + 1, dtype=np.int32)
    np.cumsum(node_degrees, out=ent_offsets[1:])
    col_of_entry = np.repeat(np.arange(n_passages, dtype=np.int32), edge_degrees)
    order = np.argsort(pas_indices, kind="stable")
    ent_indices = col_of_entry[order].astype(np.int32)

    return IncidenceMatrix(
        n_entities=n_entities,
        n_passages=n_passages,
        ent_offsets=ent_offsets,
        ent_indices=ent_indices,
        pas_offsets=pas_offsets,
        pas_indices=pas_indices,
    )


def compute_degrees(incidence: IncidenceMatrix) -> DegreeVectors:
    """Row and column sums of H as integer vectors."""
    return DegreeVectors(
        node_degrees=np.diff(incidence.ent_offsets).astype(np.int64),
        edge_degrees=np.diff(incidence.pas_offsets).astype(np.int64),
    )


def entity_to_passage(vec: np.ndarray, incidence: IncidenceMatrix) -> np.ndarray:
    """H^T vec: accumulate each entity's value into the passages holding it."""
    if vec.shape != (incidence.n_entities,):
        raise ContractError(
            f"entity vector has length {vec.shape}, expected ({incidence.n_entities},)"
        )
    contrib = np.repeat(vec, np.diff(incidence.ent_offsets))
    out = np.bincount(incidence.ent_indices, weights=contrib, minlength=incidence.n_passages)
    return out.astype(np.float64, copy=False)  # bincount yields int64 when nnz == 0


def passage_to_entity(vec: np.ndarray, incidence: IncidenceMatrix) -> np.ndarray:
    """H vec: accumulate each passage's value into the entities it contains."""
    if vec.shape != (incidence.n_passages,):
        raise ContractError(
            f"passage vector has length {vec.shape}, expected ({incidence.n_passages},)"
        )
    contrib = np.repeat(vec, np.diff(incidence.pas_offsets))
    out = np.bincount(incidence.pas_indices, weights=contrib, minlength=incidence.n_entities)
    return out.astype(np.float64, copy=False)


def apply_diffusion_operator(
    x: np.ndarray,
    incidence: IncidenceMatrix,
    degrees: DegreeVectors,
    edge_weights: np.ndarray,
) -> np.ndarray:
    """One application of D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2} to x.

    Runs as staged sparse passes: scale, gather to passages, reweight,
    scatter back to entities, scale. ``edge_weights`` entries are expected
    in [0, 1] (clamped upstream); zero-degree passages contribute nothing.
    """
    x = np.asarray(x, dtype=np.float64)
    edge_weights = np.asarray(edge_weights, dtype=np.float64)
    if x.shape != (incidence.n_entities,):
        raise ContractError(
            f"x has shape {x.shape}, expected ({incidence.n_entities},)"
        )
    if edge_weights.shape != (incidence.n_passages,):
        raise ContractError(
            f"edge_weights has shape {edge_weights.shape}, expected ({incidence.n_passages},)"
        )
    u = x * degrees.inv_sqrt_node
    e = entity_to_passage(u, incidence)
    e *= edge_weights * degrees.inv_edge
    y = passage_to_entity(e, incidence)
    y *= degrees.inv_sqrt_node
    return y


@dataclass
class StatsReport:
    """Graph-scale statistics for a built index."""

    n_entities: int
    n_passages: int
    nnz: int
    node_degree_histogram: dict[int, int]
    edge_degree_histogram: dict[int, int]
    zero_degree_hyperedges: int

    def to_dict(self) -> dict:
        return {
            "nodes": self.n_entities,
            "hyperedges": self.n_passages,
            "incidences": self.nnz,
            "node_degree_histogram": {str(k): v for k, v in sorted(self.node_degree_histogram.items())},
            "edge_degree_histogram": {str(k): v for k, v in sorted(self.edge_degree_histogram.items())},
            "zero_degree_hyperedges": self.zero_degree_hyperedges,
        }


def graph_stats(incidence: IncidenceMatrix, degrees: DegreeVectors) -> StatsReport:
    def histogram(deg: np.ndarray) -> dict[int, int]:
        values, counts = np.unique(deg, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    return StatsReport(
        n_entities=incidence.n_entities,
        n_passages=incidence.n_passages,
        nnz=incidence.nnz,
        node_degree_histogram=histogram(degrees.node_degrees) if incidence.n_entities else {},
        edge_degree_histogram=histogram(degrees.edge_degrees) if incidence.n_passages else {},
        zero_degree_hyperedges=int(np.count_nonzero(degrees.edge_degrees == 0)),
    )
