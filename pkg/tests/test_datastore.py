"""Data-card store: round-trips, naming, duplicates, on-disk layout."""

from __future__ import annotations

import hashlib
import random

import pytest

from intentflow import (
    DataCard,
    DataNotFound,
    DataStore,
    DuplicateDataName,
    IOEnvelope,
    MissingModality,
)


def card(name: str, modality="bytes", **attrs) -> DataCard:
    return DataCard.make(name, {"modality": modality, **attrs})


class TestRegisterResolve:
    def test_empty_payload_round_trip(self, tmp_path):
        store = DataStore(tmp_path)
        store.register_data(card("empty"), b"")
        envelope = store.resolve("empty")
        assert envelope.payload == b""
        assert envelope.modality == "bytes"
        assert envelope.trace == ()

    def test_duplicate_name(self, tmp_path):
        store = DataStore(tmp_path)
        store.register_data(card("x"), b"1")
        with pytest.raises(DuplicateDataName):
            store.register_data(card("x"), b"2")

    def test_missing_modality(self, tmp_path):
        with pytest.raises(MissingModality):
            DataStore(tmp_path).register_data(
                DataCard.make("x", {"origin": "test"}), b"")

    def test_resolve_unknown(self, tmp_path):
        with pytest.raises(DataNotFound):
            DataStore(tmp_path).resolve("ghost")

    def test_hundred_entries_listed(self, tmp_path):
        store = DataStore(tmp_path)
        for i in range(100):
            store.register_data(card(f"d{i}"), bytes([i]))
        assert len(store.list_cards()) == 100

    def test_random_payload_hashes_match(self, tmp_path):
        store = DataStore(tmp_path)
        rng = random.Random(4)
        expected = {}
        for i in range(40):
            payload = rng.randbytes(rng.randint(0, 512))
            name = f"blob/{i}"
            expected[name] = hashlib.sha256(payload).hexdigest()
            store.register_data(card(name), payload)
        for name, digest in expected.items():
            assert hashlib.sha256(
                store.resolve(name).payload).hexdigest() == digest


class TestStoreResult:
    def test_naming_rule(self, tmp_path):
        store = DataStore(tmp_path)
        envelope = IOEnvelope(data_name="", modality="plan",
                              payload=b"result", trace=("m1",))
        name = store.store_result(envelope, run_id="R", task_key="A")
        assert name == "R/A"
        resolved = store.resolve("R/A")
        assert resolved.payload == b"result"
        assert resolved.trace == ()  # fresh lineage on resolve
        assert store.list_cards()[-1].attributes_map["trace"] == "m1"

    def test_double_store_same_run_task(self, tmp_path):
        store = DataStore(tmp_path)
        envelope = IOEnvelope("", "plan", b"x")
        store.store_result(envelope, run_id="R", task_key="A")
        with pytest.raises(DuplicateDataName):
            store.store_result(envelope, run_id="R", task_key="A")


class TestPersistence:
    def test_disk_layout_and_reload(self, tmp_path):
        store = DataStore(tmp_path)
        store.register_data(card("runA/task1", origin="result"), b"bits")
        assert (tmp_path / "objects" / "runA" / "task1" / "card.json").exists()
        assert (tmp_path / "objects" / "runA" / "task1" / "payload.bin"
                ).read_bytes() == b"bits"
        assert (tmp_path / "index.jsonl").exists()

        reopened = DataStore(tmp_path)
        assert reopened.resolve("runA/task1").payload == b"bits"
        assert [c.data_name for c in reopened.list_cards()] == ["runA/task1"]

    def test_hostile_names_stay_in_root(self, tmp_path):
        store = DataStore(tmp_path)
        store.register_data(card("../escape"), b"contained")
        objects = tmp_path / "objects"
        files = list(objects.rglob("payload.bin"))
        assert len(files) == 1
        assert objects in files[0].parents
        assert store.resolve("../escape").payload == b"contained"
