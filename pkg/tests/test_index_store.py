import json

import numpy as np
import pytest

from hyperhop.embeddings import OfflineEncoder, embed_batch
from hyperhop.entities import EntitySet, build_catalog
from hyperhop.errors import IndexIntegrityError
from hyperhop.index_store import build_index, load_index, save_index

from conftest import TOY_SETS


def make_toy_index(with_embeddings=True):
    pids = sorted(TOY_SETS)
    entity_sets = [EntitySet(pid, tuple(TOY_SETS[pid])) for pid in pids]
    catalog = build_catalog(entity_sets)
    entity_embeddings = passage_embeddings = None
    if with_embeddings:
        encoder = OfflineEncoder(dim=32)
        entity_embeddings = embed_batch(catalog.to_list(), encoder).values
        passage_embeddings = embed_batch([f"t {pid}" for pid in pids], encoder).values
    return build_index(entity_sets, catalog, pids, entity_embeddings, passage_embeddings)


def test_round_trip_preserves_everything(tmp_path):
    index = make_toy_index()
    save_index(index, tmp_path, extra_manifest={"corpus_sha256": "abc"})
    loaded = load_index(tmp_path)

    assert loaded.passage_ids == index.passage_ids
    assert loaded.catalog.to_list() == index.catalog.to_list()
    assert loaded.incidence.nnz == index.incidence.nnz
    np.testing.assert_array_equal(loaded.incidence.ent_offsets, index.incidence.ent_offsets)
    np.testing.assert_array_equal(loaded.incidence.pas_indices, index.incidence.pas_indices)
    np.testing.assert_array_equal(loaded.degrees.node_degrees, index.degrees.node_degrees)
    np.testing.assert_array_equal(loaded.entity_embeddings, index.entity_embeddings)
    np.testing.assert_array_equal(loaded.passage_embeddings, index.passage_embeddings)
    assert loaded.manifest["corpus_sha256"] == "abc"
    loaded.incidence.validate()


def test_binary_files_are_little_endian_int32(tmp_path):
    index = make_toy_index(with_embeddings=False)
    save_index(index, tmp_path)
    raw = (tmp_path / "pas_offsets.bin").read_bytes()
    assert np.frombuffer(raw, dtype="<i4").tolist() == [0, 2, 5, 7]
    raw_deg = (tmp_path / "edge_degrees.bin").read_bytes()
    assert np.frombuffer(raw_deg, dtype="<i4").tolist() == [2, 3, 2]


def test_manifest_is_byte_stable(tmp_path):
    index = make_toy_index()
    save_index(index, tmp_path / "a", extra_manifest={"corpus_sha256": "abc"})
    save_index(index, tmp_path / "b", extra_manifest={"corpus_sha256": "abc"})
    assert (tmp_path / "a/manifest.json").read_bytes() == (tmp_path / "b/manifest.json").read_bytes()


def test_missing_manifest(tmp_path):
    with pytest.raises(IndexIntegrityError, match="manifest"):
        load_index(tmp_path)


def test_corrupted_counts_detected(tmp_path):
    index = make_toy_index(with_embeddings=False)
    save_index(index, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    manifest["nnz"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(IndexIntegrityError):
        load_index(tmp_path)


def test_missing_binary_detected(tmp_path):
    index = make_toy_index(with_embeddings=False)
    save_index(index, tmp_path)
    (tmp_path / "ent_indices.bin").unlink()
    with pytest.raises(IndexIntegrityError, match="ent_indices"):
        load_index(tmp_path)


def test_misaligned_sets_rejected():
    entity_sets = [EntitySet("p1", ("a",))]
    catalog = build_catalog(entity_sets)
    with pytest.raises(IndexIntegrityError):
        build_index(entity_sets, catalog, ["p1", "p2"])
