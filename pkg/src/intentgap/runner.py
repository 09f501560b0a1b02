"""Two-phase evaluation runner: capture episodes, then adjudicate them.

Phase one runs each (task, clarity) episode against a fresh sandboxed device
behind a capture proxy, with the user simulator answering over the
interaction API, and seals the evidence into a write-once packet. Phase two
loads sealed packets and produces verdicts, the metric report, and a
per-packet oracle audit that makes the whole judgement replayable offline.

Episodes run in a thread pool; evidence files are per-episode, the blob
store is content-addressed, so parallelism never changes the bytes written.
The aggregate report deliberately contains no timestamps, hostnames, or run
identifiers: two runs over the same inputs must produce byte-identical
report files.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .adjudication import adjudicate_episode
from .agents import AgentQuirks, CommandAgent, PlanAgent
from .httpapi import InteractionServer, SessionRegistry
from .metrics import build_report, render_text
from .oracle import (
    HeuristicOracle,
    Oracle,
    OracleError,
    RecordingOracle,
    RemoteOracle,
    ReplayOracle,
    ScriptedOracle,
)
from .packets import PacketWriter, iter_packets, load_packet
from .sandbox.client import DeviceClient
from .sandbox.mockdevice import DeviceServer, MockApp, MockDevice
from .sandbox.proxy import DEFAULT_STEP_BUDGET, CaptureProxy, MockCapture
from .sandbox.trace import BlobStore
from .simulator import Session
from .taskmodel import Clarity, Suite, Task, load_suite, validate_suite

logger = logging.getLogger(__name__)

CLARITY_ORDER = (Clarity.DETAILED, Clarity.STANDARD, Clarity.INCOMPLETE,
                 Clarity.AMBIGUOUS)
DEFAULT_PARALLELISM = 20
DEFAULT_SESSION_TIMEOUT_S = 600.0
VERDICTS_VERSION = "v1"


class RunnerError(Exception):
    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


@dataclass
class RunConfig:
    """Resolved configuration for one capture run."""

    suite: str
    output_dir: str
    run_id: str = "run"
    clarity_filter: Optional[List[str]] = None
    parallelism: int = DEFAULT_PARALLELISM
    step_budget: int = DEFAULT_STEP_BUDGET
    session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S
    seed: int = 0
    oracle: Dict[str, Any] = field(default_factory=lambda: {"kind": "heuristic"})
    agent: Dict[str, Any] = field(default_factory=lambda: {"kind": "plan"})

    @classmethod
    def from_dict(cls, d: dict, base: Optional[Path] = None) -> "RunConfig":
        cfg = cls(
            suite=d["suite"],
            output_dir=d["output_dir"],
            run_id=d.get("run_id", "run"),
            clarity_filter=d.get("clarity_filter"),
            parallelism=int(d.get("parallelism", DEFAULT_PARALLELISM)),
            step_budget=int(d.get("step_budget", DEFAULT_STEP_BUDGET)),
            session_timeout_s=float(
                d.get("session_timeout_s", DEFAULT_SESSION_TIMEOUT_S)),
            seed=int(d.get("seed", 0)),
            oracle=dict(d.get("oracle", {"kind": "heuristic"})),
            agent=dict(d.get("agent", {"kind": "plan"})),
        )
        if base is not None:
            cfg.suite = str((base / cfg.suite).resolve())
            cfg.output_dir = str((base / cfg.output_dir).resolve())
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), base=path.parent)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "output_dir": self.output_dir,
            "run_id": self.run_id,
            "clarity_filter": self.clarity_filter,
            "parallelism": self.parallelism,
            "step_budget": self.step_budget,
            "session_timeout_s": self.session_timeout_s,
            "seed": self.seed,
            "oracle": self.oracle,
            "agent": self.agent,
        }


def build_oracle(spec: Dict[str, Any]) -> Oracle:
    """Oracle backend from a config stanza.

    Credentials come from the environment only (ORACLE_API_KEY), never from
    config files that end up inside run directories.
    """

    kind = spec.get("kind", "heuristic")
    if kind == "heuristic":
        return HeuristicOracle()
    if kind == "scripted":
        return ScriptedOracle.load(spec["script"])
    if kind == "remote":
        return RemoteOracle(
            endpoint=spec["endpoint"],
            api_key=os.environ.get("ORACLE_API_KEY"),
            temperature=float(spec.get("temperature", 0.0)),
            eval_mode=bool(spec.get("eval_mode", True)),
            retries=int(spec.get("retries", 2)),
            timeout_s=float(spec.get("timeout_s", 30.0)),
        )
    raise RunnerError("ORACLE_KIND", f"unknown oracle kind '{kind}'")


def _build_agent(spec: Dict[str, Any], task: Task, app: MockApp):
    kind = spec.get("kind", "plan")
    if kind == "plan":
        quirks = AgentQuirks.from_dict(spec.get("quirks", {}).get(task.task_id, {}))
        return PlanAgent(app.public, asking=bool(spec.get("asking", True)),
                         quirks=quirks)
    if kind == "command":
        return CommandAgent(spec["argv"], timeout_s=float(spec.get("timeout_s", 300.0)))
    raise RunnerError("AGENT_KIND", f"unknown agent kind '{kind}'")


def _load_app(suite: Suite, task: Task) -> MockApp:
    if not task.mock_app:
        raise RunnerError("NO_MOCK_APP", f"task '{task.task_id}' names no app document")
    return MockApp.load(suite.root / task.mock_app)


def plan_episodes(suite: Suite, clarity_filter: Optional[List[str]]) -> List[Tuple[Task, Clarity]]:
    """FIFO episode list: manifest task order, fixed clarity order within."""

    wanted = None if clarity_filter is None else {Clarity(c) for c in clarity_filter}
    episodes: List[Tuple[Task, Clarity]] = []
    for task in suite.tasks:
        for clarity in CLARITY_ORDER:
            if task.instruction(clarity) is None:
                continue
            if wanted is not None and clarity not in wanted:
                continue
            episodes.append((task, clarity))
    return episodes


def _run_episode(
    suite: Suite,
    task: Task,
    clarity: Clarity,
    config: RunConfig,
    run_dir: Path,
    blobs: BlobStore,
    registry: SessionRegistry,
    http_base: str,
    backend_oracle: Oracle,
) -> dict:
    app = _load_app(suite, task)
    device = MockDevice(app)
    device.apply_injection(task.injection_spec)

    writer = PacketWriter(run_dir / "packets", task.task_id, clarity.value)
    session = Session(
        writer.name, task, clarity,
        RecordingOracle(backend_oracle, writer.oracle_audit_path))
    registry.add(session)
    trace = writer.trace_writer()
    agent = _build_agent(config.agent, task, app)

    outcome: dict = {"packet": writer.name}
    try:
        with DeviceServer(device) as backend:
            with CaptureProxy(backend.address, MockCapture(device, blobs),
                              trace, blobs, step_budget=config.step_budget,
                              session=session) as proxy:
                client = DeviceClient(proxy.address)
                session_url = f"{http_base}/session/{session.session_id}"
                failure: list[BaseException] = []

                def _drive() -> None:
                    try:
                        agent.run(session_url, client)
                    except BaseException as exc:  # noqa: BLE001 - report, then abort
                        failure.append(exc)

                thread = threading.Thread(target=_drive, daemon=True)
                thread.start()
                thread.join(timeout=config.session_timeout_s)
                if thread.is_alive():
                    session.abort("TIMEOUT")
                    thread.join(timeout=5)
                elif failure:
                    logger.warning("agent failed on %s: %r", writer.name, failure[0])
                    session.abort("AGENT_ERROR")
                elif session.finish_reason is None:
                    session.abort("ABANDONED")
    finally:
        registry.remove(session.session_id)

    instruction = task.instruction(clarity)
    sealed = writer.seal(instruction.text, session.turns, session.finish_reason)
    outcome["finish_reason"] = session.finish_reason
    outcome["dir"] = str(sealed)
    return outcome


def run_suite(config: RunConfig) -> Path:
    """Phase one: capture every planned episode into a sealed packet."""

    suite = load_suite(config.suite)
    problems = validate_suite(suite)
    if problems:
        raise RunnerError(
            "SUITE_INVALID",
            "; ".join(f"{tid}: {v[0]}" for tid, v in sorted(problems.items())))

    run_dir = Path(config.output_dir) / config.run_id
    if run_dir.exists():
        raise RunnerError("RUN_EXISTS", str(run_dir))
    (run_dir / "packets").mkdir(parents=True)
    with open(run_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    blobs = BlobStore(run_dir / "blobs")
    backend_oracle = build_oracle(config.oracle)
    episodes = plan_episodes(suite, config.clarity_filter)
    if not episodes:
        raise RunnerError("NO_EPISODES", "suite and clarity filter select nothing")

    registry = SessionRegistry()
    with InteractionServer(registry) as server:
        with ThreadPoolExecutor(max_workers=max(1, config.parallelism)) as pool:
            futures = [
                pool.submit(_run_episode, suite, task, clarity, config, run_dir,
                            blobs, registry, server.address, backend_oracle)
                for task, clarity in episodes
            ]
            results = [f.result() for f in futures]
    logger.info("captured %d packets into %s", len(results), run_dir)
    return run_dir


# ---------------------------------------------------------------------------
# Phase two


def _suite_for_run(run_dir: Path) -> tuple[Suite, dict]:
    with open(Path(run_dir) / "config.json", encoding="utf-8") as fh:
        config = json.load(fh)
    return load_suite(config["suite"]), config


def _dump_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _write_report(run_dir: Path, verdict_dicts: List[dict], tags: dict) -> dict:
    report = build_report(verdict_dicts, tags)
    _dump_json(run_dir / "report.json", report)
    with open(run_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(render_text(report))
    return report


def adjudicate_run(
    run_dir: str | Path,
    oracle_spec: Optional[Dict[str, Any]] = None,
    version: str = VERDICTS_VERSION,
) -> dict:
    """Phase two: verdicts, per-packet oracle audit, and the metric report."""

    run_dir = Path(run_dir)
    suite, config = _suite_for_run(run_dir)
    inner = build_oracle(oracle_spec or config.get("oracle", {"kind": "heuristic"}))

    out_dir = run_dir / "verdicts" / version
    audit_dir = out_dir / "audit"
    audit_dir.mkdir(parents=True, exist_ok=True)

    verdict_dicts: List[dict] = []
    for packet_dir in iter_packets(run_dir):
        packet = load_packet(packet_dir)
        task = suite.task(packet.task_id)
        audit_path = audit_dir / f"{packet_dir.name}.ndjson"
        if audit_path.exists():
            audit_path.unlink()
        oracle = RecordingOracle(inner, audit_path)
        verdict = adjudicate_episode(
            task, Clarity(packet.clarity), packet.trace_records, packet.turns,
            oracle, finish_reason=packet.finish_reason)
        verdict_dicts.append(verdict.to_dict())
    if not verdict_dicts:
        raise RunnerError("NO_PACKETS", str(run_dir))

    _dump_json(out_dir / "verdicts.json", verdict_dicts)
    return _write_report(run_dir, verdict_dicts, suite.manifest.get("tags", {}))


def replay_run(run_dir: str | Path, version: str = VERDICTS_VERSION) -> List[str]:
    """Recompute every verdict from sealed evidence plus the recorded oracle
    audit, with no oracle backend. Returns the list of discrepancies; empty
    means the run is exactly reproducible offline."""

    run_dir = Path(run_dir)
    suite, _ = _suite_for_run(run_dir)
    out_dir = run_dir / "verdicts" / version
    with open(out_dir / "verdicts.json", encoding="utf-8") as fh:
        stored = {v["task_id"] + "_" + v["clarity"]: v for v in json.load(fh)}

    problems: List[str] = []
    replayed: List[dict] = []
    for packet_dir in iter_packets(run_dir):
        name = packet_dir.name
        packet = load_packet(packet_dir)
        audit_path = out_dir / "audit" / f"{name}.ndjson"
        if not audit_path.exists():
            problems.append(f"{name}: missing oracle audit")
            continue
        oracle = ReplayOracle.load(audit_path)
        try:
            verdict = adjudicate_episode(
                suite.task(packet.task_id), Clarity(packet.clarity),
                packet.trace_records, packet.turns, oracle,
                finish_reason=packet.finish_reason)
        except OracleError:
            problems.append(
                f"{name}: REPLAY_INCOMPLETE {len(oracle.missing)} digests")
            continue
        doc = verdict.to_dict()
        replayed.append(doc)
        if name not in stored:
            problems.append(f"{name}: no stored verdict")
        elif doc != stored[name]:
            problems.append(f"{name}: verdict drifted from stored copy")
    if len(stored) != len(replayed):
        problems.append(
            f"packet count {len(replayed)} != stored verdicts {len(stored)}")
    return problems
