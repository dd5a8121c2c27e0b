"""Data-card store: opaque payloads described by cards, served as envelopes.

On disk every data_name owns a directory holding card.json and payload.bin
(path segments are percent-encoded so names like "run/task" nest safely);
an append-only index.jsonl records registrations for listing and replay.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataNotFound, DuplicateDataName, MissingModality


@dataclass(frozen=True)
class DataCard:
    data_name: str
    attributes: tuple[tuple[str, str], ...]

    @property
    def attributes_map(self) -> dict[str, str]:
        return dict(self.attributes)

    @property
    def modality(self) -> str:
        return self.attributes_map["modality"]

    @staticmethod
    def make(data_name: str, attributes: dict[str, str]) -> "DataCard":
        return DataCard(
            data_name=data_name,
            attributes=tuple(sorted((str(k), str(v))
                                    for k, v in attributes.items())),
        )

    def to_document(self) -> dict:
        return {"data_name": self.data_name,
                "attributes": {k: v for k, v in self.attributes}}


@dataclass(frozen=True)
class IOEnvelope:
    """The unified input/output unit models exchange: a named payload with a
    modality tag and the trace of models that shaped it within a run."""

    data_name: str
    modality: str
    payload: bytes
    trace: tuple[str, ...] = ()


@dataclass
class _Entry:
    card: DataCard
    payload: bytes = field(repr=False, default=b"")


class DataStore:
    """Payload store keyed by data_name; reads concurrent, writes serialized."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.jsonl"
        self._entries: dict[str, _Entry] = {}
        self._order: list[str] = []
        self._lock = threading.RLock()
        self._load_index()

    # -- operations ------------------------------------------------------------

    def register_data(self, card: DataCard, payload: bytes) -> None:
        if not card.data_name:
            raise MissingModality("data card needs a non-empty data_name")
        if "modality" not in card.attributes_map:
            raise MissingModality(
                f"data card '{card.data_name}' lacks the 'modality' attribute")
        with self._lock:
            if card.data_name in self._entries:
                raise DuplicateDataName(
                    f"data '{card.data_name}' is already registered")
            self._write_entry(card, bytes(payload))
            self._entries[card.data_name] = _Entry(card=card, payload=bytes(payload))
            self._order.append(card.data_name)

    def resolve(self, data_name: str) -> IOEnvelope:
        entry = self._entries.get(data_name)
        if entry is None:
            raise DataNotFound(f"no data named '{data_name}'")
        return IOEnvelope(
            data_name=data_name,
            modality=entry.card.modality,
            payload=entry.payload,
            trace=(),
        )

    def store_result(self, envelope: IOEnvelope, *, run_id: str,
                     task_key: str) -> str:
        """Persist a task output under the "<run_id>/<task_key>" naming rule;
        the card records modality and trace."""
        data_name = f"{run_id}/{task_key}"
        card = DataCard.make(data_name, {
            "modality": envelope.modality,
            "origin": "result",
            "trace": ",".join(envelope.trace),
        })
        self.register_data(card, envelope.payload)
        return data_name

    def exists(self, data_name: str) -> bool:
        return data_name in self._entries

    def list_cards(self) -> list[DataCard]:
        with self._lock:
            return [self._entries[name].card for name in self._order]

    # -- persistence -------------------------------------------------------------

    def _dir_for(self, data_name: str) -> Path:
        # Percent-encoding alone keeps "." / ".." intact, which would escape
        # the objects root; encode dots too and mark empty segments.
        quoted = [
            urllib.parse.quote(seg, safe="").replace(".", "%2E") or "%"
            for seg in data_name.split("/")
        ]
        return self.root.joinpath("objects", *quoted)

    def _write_entry(self, card: DataCard, payload: bytes) -> None:
        target = self._dir_for(card.data_name)
        target.mkdir(parents=True, exist_ok=True)
        (target / "card.json").write_text(
            json.dumps(card.to_document(), separators=(",", ":")),
            encoding="utf-8")
        (target / "payload.bin").write_bytes(payload)
        with self._index_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"data_name": card.data_name},
                                separators=(",", ":")) + "\n")

    def _load_index(self) -> None:
        if not self._index_path.exists():
            return
        for line in self._index_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            data_name = json.loads(line)["data_name"]
            if data_name in self._entries:
                continue
            target = self._dir_for(data_name)
            card_doc = json.loads((target / "card.json").read_text(encoding="utf-8"))
            card = DataCard.make(card_doc["data_name"], card_doc["attributes"])
            payload = (target / "payload.bin").read_bytes()
            self._entries[data_name] = _Entry(card=card, payload=payload)
            self._order.append(data_name)
