"""Immutable on-disk retrieval index.

Directory layout (all binary arrays little-endian):

    manifest.json           counts, format version, corpus digest, encoder id
    entities.json           entity strings, row order
    passages.json           passage ids, column order
    ent_offsets.bin         int32, len n_entities + 1
    ent_indices.bin         int32, len nnz (passage column per entry)
    pas_offsets.bin         int32, len n_passages + 1
    pas_indices.bin         int32, len nnz (entity row per entry)
    node_degrees.bin        int32, len n_entities
    edge_degrees.bin        int32, len n_passages
    entity_embeddings.bin   float32, n_entities x dim
    passage_embeddings.bin  float32, n_passages x dim

The manifest is written with sorted keys and no timestamps, so rebuilding
from warm caches reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .entities import EntityCatalog, EntitySet
from .errors import IndexIntegrityError
from .hypergraph import (
    DegreeVectors,
    IncidenceMatrix,
    build_incidence,
    compute_degrees,
)

FORMAT_VERSION = 1

MANIFEST_NAME = "manifest.json"


@dataclass
class HypergraphIndex:
    """Catalog, incidence, degrees and aligned embeddings for one corpus."""

    catalog: EntityCatalog
    incidence: IncidenceMatrix
    degrees: DegreeVectors
    passage_ids: list[str]
    entity_embeddings: np.ndarray | None = None  # float32 (n_entities, dim)
    passage_embeddings: np.ndarray | None = None  # float32 (n_passages, dim)
    manifest: dict | None = None

    @property
    def n_entities(self) -> int:
        return self.incidence.n_entities

    @property
    def n_passages(self) -> int:
        return self.incidence.n_passages


def build_index(
    entity_sets: Sequence[EntitySet],
    catalog: EntityCatalog,
    passage_ids: Sequence[str],
    entity_embeddings: np.ndarray | None = None,
    passage_embeddings: np.ndarray | None = None,
    manifest: dict | None = None,
) -> HypergraphIndex:
    """Assemble an in-memory index from already-extracted pieces."""
    if len(entity_sets) != len(passage_ids):
        raise IndexIntegrityError("entity sets and passage ids are misaligned")
    incidence = build_incidence(entity_sets, catalog)
    return HypergraphIndex(
        catalog=catalog,
        incidence=incidence,
        degrees=compute_degrees(incidence),
        passage_ids=list(passage_ids),
        entity_embeddings=entity_embeddings,
        passage_embeddings=passage_embeddings,
        manifest=manifest,
    )


def _write_array(path: Path, array: np.ndarray, dtype: str) -> None:
    array.astype(dtype).tofile(path)


def _read_array(path: Path, dtype: str) -> np.ndarray:
    if not path.exists():
        raise IndexIntegrityError(f"missing index file: {path.name}")
    array = np.fromfile(path, dtype=dtype)
    array.flags.writeable = False  # loaded indices are immutable
    return array


def save_index(index: HypergraphIndex, directory: str | Path, extra_manifest: dict | None = None) -> dict:
    """Persist the index; returns the manifest that was written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    inc = index.incidence
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_entities": inc.n_entities,
        "n_passages": inc.n_passages,
        "nnz": inc.nnz,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    if index.manifest:
        manifest = {**index.manifest, **manifest}

    (directory / "entities.json").write_text(
        json.dumps(index.catalog.to_list(), ensure_ascii=False), encoding="utf-8"
    )
    (directory / "passages.json").write_text(
        json.dumps(index.passage_ids, ensure_ascii=False), encoding="utf-8"
    )
    _write_array(directory / "ent_offsets.bin", inc.ent_offsets, "<i4")
    _write_array(directory / "ent_indices.bin", inc.ent_indices, "<i4")
    _write_array(directory / "pas_offsets.bin", inc.pas_offsets, "<i4")
    _write_array(directory / "pas_indices.bin", inc.pas_indices, "<i4")
    _write_array(directory / "node_degrees.bin", index.degrees.node_degrees, "<i4")
    _write_array(directory / "edge_degrees.bin", index.degrees.edge_degrees, "<i4")
    if index.entity_embeddings is not None:
        manifest["embedding_dim"] = int(index.entity_embeddings.shape[1])
        _write_array(directory / "entity_embeddings.bin", index.entity_embeddings, "<f4")
    if index.passage_embeddings is not None:
        manifest.setdefault("embedding_dim", int(index.passage_embeddings.shape[1]))
        _write_array(directory / "passage_embeddings.bin", index.passage_embeddings, "<f4")

    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def load_index(directory: str | Path) -> HypergraphIndex:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise IndexIntegrityError(f"no index manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise IndexIntegrityError(
            f"unsupported index format version {manifest.get('format_version')!r}"
        )
    entities = json.loads((directory / "entities.json").read_text(encoding="utf-8"))
    passage_ids = json.loads((directory / "passages.json").read_text(encoding="utf-8"))
    n_entities = manifest["n_entities"]
    n_passages = manifest["n_passages"]
    nnz = manifest["nnz"]

    incidence = IncidenceMatrix(
        n_entities=n_entities,
        n_passages=n_passages,
        ent_offsets=_read_array(directory / "ent_offsets.bin", "<i4"),
        ent_indices=_read_array(directory / "ent_indices.bin", "<i4"),
        pas_offsets=_read_array(directory / "pas_offsets.bin", "<i4"),
        pas_indices=_read_array(directory / "pas_indices.bin", "<i4"),
    )
    if len(entities) != n_entities or len(passage_ids) != n_passages:
        raise IndexIntegrityError("manifest counts disagree with stored id lists")
    if incidence.ent_indices.shape[0] != nnz or incidence.pas_indices.shape[0] != nnz:
        raise IndexIntegrityError("manifest nnz disagrees with stored incidence")

    degrees = DegreeVectors(
        node_degrees=_read_array(directory / "node_degrees.bin", "<i4").astype(np.int64),
        edge_degrees=_read_array(directory / "edge_degrees.bin", "<i4").astype(np.int64),
    )

    dim = manifest.get("embedding_dim")
    entity_embeddings = passage_embeddings = None
    if dim:
        ent_path = directory / "entity_embeddings.bin"
        pas_path = directory / "passage_embeddings.bin"
        if ent_path.exists():
            entity_embeddings = _read_array(ent_path, "<f4").reshape(n_entities, dim)
        if pas_path.exists():
            passage_embeddings = _read_array(pas_path, "<f4").reshape(n_passages, dim)

    return HypergraphIndex(
        catalog=EntityCatalog(entities),
        incidence=incidence,
        degrees=degrees,
        passage_ids=passage_ids,
        entity_embeddings=entity_embeddings,
        passage_embeddings=passage_embeddings,
        manifest=manifest,
    )
