"""Sealed evidence packets and the on-disk layout of a capture run.

A packet is the complete, self-contained record of one episode: the
instruction that was served, the interaction turns, the device trace, and
the first-phase oracle audit log. Packets are write-once. While an episode
is in flight its directory carries a ``.partial`` suffix; sealing computes
an integrity digest over the packet contents and atomically renames the
directory, so a crash can never leave a packet that looks finished.

Readers verify the seal. A packet that fails verification is moved aside
into a ``quarantine/`` sibling directory and reported as an error rather
than silently skipped or trusted.

Run directory layout::

    <run>/
      config.json            resolved run configuration
      blobs/                 content-addressed screenshot store (shared)
      packets/<task>_<clarity>/
        packet.json          sealed manifest (this module)
        trace.jsonl          device action/observation trace
        oracle.ndjson        first-phase oracle audit log
      verdicts/<version>/    second-phase outputs (written later)
      report.json            aggregate metrics (written later)
      report.txt
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from .oracle import canonical_json
from .sandbox.trace import TraceWriter, read_trace
from .simulator import InteractionTurn

PACKET_MANIFEST = "packet.json"
TRACE_FILE = "trace.jsonl"
ORACLE_AUDIT_FILE = "oracle.ndjson"
PARTIAL_SUFFIX = ".partial"
QUARANTINE_DIR = "quarantine"


class PacketError(Exception):
    """Raised when a packet is malformed, unsealed, or fails verification."""

    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def packet_name(task_id: str, clarity: str) -> str:
    return f"{task_id}_{clarity}"


def compute_seal(manifest: Dict[str, Any]) -> str:
    """Digest over every manifest field except the seal itself."""

    body = {k: v for k, v in manifest.items() if k != "seal"}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


@dataclass
class Packet:
    """A verified, read-only view of a sealed episode record."""

    task_id: str
    clarity: str
    instruction: str
    finish_reason: Optional[str]
    turns: List[InteractionTurn]
    trace_records: List[Dict[str, Any]]
    directory: Path
    manifest: Dict[str, Any] = field(repr=False, default_factory=dict)


class PacketWriter:
    """Accumulates one episode's evidence, then seals it atomically.

    The writer owns a ``.partial`` directory. ``trace_path`` and
    ``oracle_audit_path`` exist from construction so the capture machinery
    (TraceWriter, RecordingOracle) can stream into them. ``seal`` fixes the
    manifest, hashes the streamed files, and renames the directory to its
    final name. A writer can seal at most once.
    """

    def __init__(self, packets_root: Path, task_id: str, clarity: str) -> None:
        self.task_id = task_id
        self.clarity = clarity
        self.name = packet_name(task_id, clarity)
        self.final_dir = Path(packets_root) / self.name
        self.work_dir = Path(packets_root) / (self.name + PARTIAL_SUFFIX)
        if self.final_dir.exists():
            raise PacketError("PACKET_EXISTS", str(self.final_dir))
        self.work_dir.mkdir(parents=True, exist_ok=True)
        self.trace_path = self.work_dir / TRACE_FILE
        self.oracle_audit_path = self.work_dir / ORACLE_AUDIT_FILE
        self.trace_path.touch()
        self.oracle_audit_path.touch()
        self._sealed = False

    def trace_writer(self) -> TraceWriter:
        return TraceWriter(self.trace_path)

    def seal(
        self,
        instruction: str,
        turns: List[InteractionTurn],
        finish_reason: Optional[str],
    ) -> Path:
        if self._sealed:
            raise PacketError("ALREADY_SEALED", self.name)
        manifest: Dict[str, Any] = {
            "task_id": self.task_id,
            "clarity": self.clarity,
            "instruction": instruction,
            "finish_reason": finish_reason,
            "turns": [t.to_dict() for t in turns],
            "trace_sha256": _file_sha256(self.trace_path),
            "oracle_sha256": _file_sha256(self.oracle_audit_path),
        }
        manifest["seal"] = compute_seal(manifest)
        payload = json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False)
        (self.work_dir / PACKET_MANIFEST).write_text(payload + "\n", encoding="utf-8")
        self.work_dir.replace(self.final_dir)
        self._sealed = True
        return self.final_dir

    def discard(self) -> None:
        """Drop an unsealed packet (episode failed before capture began)."""

        if self._sealed:
            raise PacketError("ALREADY_SEALED", self.name)
        for child in self.work_dir.iterdir():
            child.unlink()
        self.work_dir.rmdir()


def _quarantine(directory: Path, code: str) -> Path:
    pen = directory.parent.parent / QUARANTINE_DIR
    pen.mkdir(parents=True, exist_ok=True)
    target = pen / directory.name
    n = 1
    while target.exists():
        target = pen / f"{directory.name}.{n}"
        n += 1
    directory.replace(target)
    return target


def load_packet(directory: Path, verify: bool = True) -> Packet:
    """Read a sealed packet, verifying the seal and streamed-file hashes.

    On verification failure the directory is moved to the run's quarantine
    area and PacketError is raised with the failing check in ``code``.
    """

    directory = Path(directory)
    manifest_path = directory / PACKET_MANIFEST
    if directory.name.endswith(PARTIAL_SUFFIX) or not manifest_path.exists():
        raise PacketError("PACKET_UNSEALED", str(directory))
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if verify:
        failure = None
        if manifest.get("seal") != compute_seal(manifest):
            failure = "SEAL_MISMATCH"
        elif _file_sha256(directory / TRACE_FILE) != manifest["trace_sha256"]:
            failure = "TRACE_TAMPERED"
        elif _file_sha256(directory / ORACLE_AUDIT_FILE) != manifest["oracle_sha256"]:
            failure = "AUDIT_TAMPERED"
        if failure is not None:
            moved = _quarantine(directory, failure)
            raise PacketError(failure, f"{directory.name} -> {moved}")
    records = read_trace(directory / TRACE_FILE)
    turns = [InteractionTurn.from_dict(t) for t in manifest["turns"]]
    return Packet(
        task_id=manifest["task_id"],
        clarity=manifest["clarity"],
        instruction=manifest["instruction"],
        finish_reason=manifest["finish_reason"],
        turns=turns,
        trace_records=records,
        directory=directory,
        manifest=manifest,
    )


def iter_packets(run_dir: Path) -> Iterator[Path]:
    """Yield sealed packet directories in name order."""

    root = Path(run_dir) / "packets"
    if not root.is_dir():
        return
    for child in sorted(root.iterdir()):
        if child.is_dir() and not child.name.endswith(PARTIAL_SUFFIX):
            yield child
