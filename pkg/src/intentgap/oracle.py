"""Semantic oracle gateway: one judge() call, swappable backends.

Every judgment that would otherwise need a human or a language model flows
through a single request type keyed by a canonical digest, so any backend
can be recorded once and replayed bit-exactly: a scripted table for tests,
deterministic heuristics for offline runs, or a remote endpoint for real
model calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

logger = logging.getLogger(__name__)


class OraclePurpose(str, Enum):
    SEMANTIC_MATCH = "SemanticMatch"
    PAGE_DESCRIBE = "PageDescribe"
    INQUIRY_CLASSIFY = "InquiryClassify"
    REQUIREMENT_EVIDENCE = "RequirementEvidence"
    REDUNDANCY_JUDGE = "RedundancyJudge"
    TERMINATION_JUDGE = "TerminationJudge"


class InquiryKind(str, Enum):
    LOW_LEVEL_UI = "LowLevelUI"
    PARAMETER_SEEKING = "ParameterSeeking"
    OTHER = "Other"


class OracleError(Exception):
    """Backend failure with a machine-readable code.

    Codes: TIMEOUT, SCHEMA_VIOLATION, SCRIPT_MISS, REPLAY_INCOMPLETE.
    """

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


def canonical_json(obj) -> str:
    """Stable minimal JSON used for digests and on-disk verdict keys."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class OracleRequest:
    purpose: OraclePurpose
    payload: dict

    def digest(self) -> str:
        doc = {"purpose": self.purpose.value, "payload": self.payload}
        return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class OracleVerdict:
    purpose: OraclePurpose
    data: dict


# Response schema per purpose: key -> validator over the raw value.
_BOOL = lambda v: isinstance(v, bool)  # noqa: E731
_STR = lambda v: isinstance(v, str)  # noqa: E731
_VERDICT_SCHEMA: dict[OraclePurpose, dict] = {
    OraclePurpose.SEMANTIC_MATCH: {"match": _BOOL},
    OraclePurpose.PAGE_DESCRIBE: {
        "page": _STR,
        "objects": lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
    },
    OraclePurpose.INQUIRY_CLASSIFY: {
        "classification": lambda v: v in {k.value for k in InquiryKind},
    },
    OraclePurpose.REQUIREMENT_EVIDENCE: {"evidenced": _BOOL},
    OraclePurpose.REDUNDANCY_JUDGE: {"redundant": _BOOL},
    OraclePurpose.TERMINATION_JUDGE: {
        "termination": lambda v: v in ("Early", "Normal", "Delayed"),
    },
}


def validate_verdict(purpose: OraclePurpose, data: dict) -> OracleVerdict:
    """Enforce the per-purpose response schema; extra keys are rejected."""
    schema = _VERDICT_SCHEMA[purpose]
    if not isinstance(data, dict):
        raise OracleError("SCHEMA_VIOLATION", f"{purpose.value}: verdict is not an object")
    extra = set(data) - set(schema)
    if extra:
        raise OracleError(
            "SCHEMA_VIOLATION", f"{purpose.value}: unexpected keys {sorted(extra)}")
    for key, check in schema.items():
        if key not in data:
            raise OracleError("SCHEMA_VIOLATION", f"{purpose.value}: missing key '{key}'")
        if not check(data[key]):
            raise OracleError(
                "SCHEMA_VIOLATION", f"{purpose.value}: bad value for '{key}': {data[key]!r}")
    return OracleVerdict(purpose, data)


class Oracle:
    """Backend interface: subclasses implement _answer(request) -> dict."""

    def judge(self, request: OracleRequest) -> OracleVerdict:
        return validate_verdict(request.purpose, self._answer(request))

    def _answer(self, request: OracleRequest) -> dict:
        raise NotImplementedError


class ScriptedOracle(Oracle):
    """Digest-keyed answer table; an unknown digest fails loudly.

    The script file is a JSON object mapping request digests to verdict
    objects. Entries may carry an optional "_request" copy for human
    readability; it is ignored when answering.
    """

    def __init__(self, script: dict[str, dict]):
        self.script = {
            d: {k: v for k, v in entry.items() if k != "_request"}
            for d, entry in script.items()
        }

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedOracle":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _answer(self, request: OracleRequest) -> dict:
        digest = request.digest()
        if digest not in self.script:
            raise OracleError(
                "SCRIPT_MISS",
                f"{request.purpose.value} digest {digest} "
                f"payload={canonical_json(request.payload)}")
        return self.script[digest]


_WORD = re.compile(r"[a-z0-9']+")
_STOPWORDS = frozenset(
    "the a an to on in at of for and or with button option field item".split())
_VERB_CLASSES = {
    "click": ("tap", "click", "select", "choose", "toggle"),
    "input": ("type", "input", "enter"),
    "swipe": ("swipe", "scroll"),
}


def _verb_class(text: str) -> str | None:
    first = _WORD.findall(text.lower())
    for token in first:
        for cls, verbs in _VERB_CLASSES.items():
            if token in verbs:
                return cls
    return None


def _target_tokens(text: str) -> frozenset[str]:
    cleaned = text.replace("[", " ").replace("]", " ")
    tokens = set(_WORD.findall(cleaned.lower()))
    tokens -= _STOPWORDS
    for verbs in _VERB_CLASSES.values():
        tokens -= set(verbs)
    return frozenset(tokens)


_QUESTION_CUES = re.compile(
    r"\b(what|which|should|shall|do|does|can|could|would|is|are|how|where|who|whom|when|prefer\w*|want)\b")


class HeuristicOracle(Oracle):
    """Pure-function answers: deterministic, dependency-free, no state."""

    def _answer(self, request: OracleRequest) -> dict:
        p = request.payload
        purpose = request.purpose
        if purpose == OraclePurpose.SEMANTIC_MATCH:
            cand, ref = p["candidate"], p["reference"]
            match = (
                _verb_class(cand) == _verb_class(ref)
                and _target_tokens(cand) == _target_tokens(ref))
            return {"match": match}
        if purpose == OraclePurpose.INQUIRY_CLASSIFY:
            q = p["question"].lower()
            if _QUESTION_CUES.search(q) or q.rstrip().endswith("?"):
                return {"classification": InquiryKind.PARAMETER_SEEKING.value}
            return {"classification": InquiryKind.OTHER.value}
        if purpose == OraclePurpose.REQUIREMENT_EVIDENCE:
            return {"evidenced": p["value"].lower() in p["step_text"].lower()}
        if purpose == OraclePurpose.REDUNDANCY_JUDGE:
            return {"redundant": p["feedback"] == "No Change"}
        if purpose == OraclePurpose.PAGE_DESCRIBE:
            obs = p["observation"]
            lines = [ln.strip() for ln in obs.splitlines() if ln.strip()]
            page = lines[0] if lines else "Unknown"
            objects = re.findall(r"\[([^\]]+)\]", obs)
            return {"page": page, "objects": objects}
        if purpose == OraclePurpose.TERMINATION_JUDGE:
            return {"termination": "Normal"}
        raise OracleError("SCHEMA_VIOLATION", f"unknown purpose {purpose}")


class RemoteOracle(Oracle):
    """HTTP backend: POST {purpose, payload, temperature} to one endpoint.

    Evaluation runs pin temperature to 0.0; constructing an eval-mode
    backend with any other value is refused. Transport errors and non-JSON
    replies consume the retry budget, then surface as TIMEOUT; replies that
    parse but break the verdict schema fail immediately as SCHEMA_VIOLATION.
    """

    def __init__(self, endpoint: str, api_key: str | None = None,
                 temperature: float = 0.0, eval_mode: bool = True,
                 retries: int = 2, timeout_s: float = 30.0, session=None):
        if eval_mode and temperature != 0.0:
            raise ValueError(
                f"eval mode requires temperature 0.0, got {temperature}")
        self.endpoint = endpoint
        self.api_key = api_key
        self.temperature = temperature
        self.retries = retries
        self.timeout_s = timeout_s
        if session is None:
            import requests
            session = requests.Session()
        self.session = session

    def _answer(self, request: OracleRequest) -> dict:
        body = {
            "purpose": request.purpose.value,
            "payload": request.payload,
            "temperature": self.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = "no attempt made"
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout_s)
                if resp.status_code != 200:
                    last = f"HTTP {resp.status_code}"
                    continue
                return resp.json()
            except OracleError:
                raise
            except ValueError as exc:  # body was not JSON
                last = f"bad JSON: {exc}"
            except Exception as exc:
                last = f"{type(exc).__name__}: {exc}"
            if attempt < self.retries:
                time.sleep(0.1 * (attempt + 1))
        raise OracleError(
            "TIMEOUT", f"{self.retries + 1} attempts to {self.endpoint} failed ({last})")


class RecordingOracle(Oracle):
    """Wrapper that appends every (request, verdict) pair to an NDJSON audit.

    The audit is append-only and flushed per line so a crashed run still
    leaves a usable prefix. Thread-safe: parallel sessions share one file.
    """

    def __init__(self, inner: Oracle, audit_path: str | Path):
        self.inner = inner
        self.audit_path = Path(audit_path)
        self._lock = threading.Lock()

    def judge(self, request: OracleRequest) -> OracleVerdict:
        verdict = self.inner.judge(request)
        line = canonical_json({
            "digest": request.digest(),
            "purpose": request.purpose.value,
            "payload": request.payload,
            "verdict": verdict.data,
        })
        with self._lock:
            with open(self.audit_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        return verdict

    def _answer(self, request: OracleRequest) -> dict:  # pragma: no cover
        return self.inner._answer(request)


class ReplayOracle(Oracle):
    """Answers from a recorded audit; anything unrecorded is a hard error.

    Misses accumulate in ``missing`` so a caller can report every absent
    digest for a pass, not just the first.
    """

    def __init__(self, records: dict[str, dict]):
        self.records = records
        self.missing: list[str] = []

    @classmethod
    def load(cls, audit_path: str | Path) -> "ReplayOracle":
        records: dict[str, dict] = {}
        with open(audit_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                records[entry["digest"]] = entry["verdict"]
        return cls(records)

    def _answer(self, request: OracleRequest) -> dict:
        digest = request.digest()
        if digest not in self.records:
            self.missing.append(digest)
            raise OracleError(
                "REPLAY_INCOMPLETE",
                f"digest {digest} absent from audit "
                f"(payload={canonical_json(request.payload)})")
        return self.records[digest]


def script_from_audit(audit_path: str | Path) -> dict[str, dict]:
    """Convert a recorded audit into a ScriptedOracle table."""
    return dict(ReplayOracle.load(audit_path).records)
