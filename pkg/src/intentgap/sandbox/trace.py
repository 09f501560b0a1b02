"""Capture storage: content-addressed blobs and an append-only trace log.

Screenshots are stored once under their SHA-256 and referenced by digest
from the JSONL trace, so identical frames cost one file and trace records
stay small and diffable.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path


class BlobStore:
    """Write-once file store keyed by content digest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self._path(digest)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            # unique temp name: concurrent writers of one digest must not
            # clobber each other's partial file before the atomic rename
            tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def get(self, digest: str) -> bytes:
        path = self._path(digest)
        if not path.exists():
            raise KeyError(digest)
        return path.read_bytes()

    def __contains__(self, digest: str) -> bool:
        return self._path(digest).exists()


@dataclass(frozen=True)
class Snapshot:
    """One captured screen state: structured doc plus rendered frame digest."""

    doc: dict | None
    png_digest: str | None

    def to_dict(self) -> dict:
        return {"doc": self.doc, "png": self.png_digest}

    @classmethod
    def from_dict(cls, d: dict | None) -> "Snapshot":
        if d is None:
            return cls(None, None)
        return cls(d.get("doc"), d.get("png"))


@dataclass(frozen=True)
class ActionRecord:
    """One device input event with its surrounding snapshots."""

    seq: int
    kind: str
    command: str
    pre: Snapshot
    post: Snapshot

    def to_dict(self) -> dict:
        return {
            "type": "action",
            "seq": self.seq,
            "kind": self.kind,
            "command": self.command,
            "pre": self.pre.to_dict(),
            "post": self.post.to_dict(),
        }


class TraceWriter:
    """Append-only JSONL trace; one line per event, flushed immediately."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seq = 0

    def _append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def next_seq(self) -> int:
        with self._lock:
            seq = self._seq
            self._seq += 1
            return seq

    def action(self, record: ActionRecord) -> None:
        self._append(record.to_dict())

    def screencap(self, png_digest: str) -> None:
        self._append({"type": "screencap", "seq": self.next_seq(), "png": png_digest})

    def note(self, kind: str, detail: dict) -> None:
        self._append({"type": kind, "seq": self.next_seq(), **detail})


def read_trace(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def action_records(records: list[dict]) -> list[dict]:
    return [r for r in records if r.get("type") == "action"]
