"""User simulator and interaction session.

The simulator holds the ground-truth intent but answers questions under a
strict reveal policy keyed to the instruction's clarity: at the two clear
levels every question is refused with a fixed sentence; at the two unclear
levels a parameter-seeking question is answered for exactly the slots it
asks about, one turn at a time, and questions outside the intent earn a
fixed no-preference reply. Low-level UI questions are always refused.
"""

from __future__ import annotations

import itertools
import logging
import re
import threading
from dataclasses import dataclass, field
from enum import Enum

from .oracle import InquiryKind, Oracle, OraclePurpose, OracleRequest
from .taskmodel import (
    AtomicRequirement,
    Clarity,
    GroundTruthIntent,
    ObservedInstruction,
    RequirementCategory,
    Task,
    cognitive_gap,
)

logger = logging.getLogger(__name__)

# Protocol constants; downstream agents may match on these bytes.
REFUSAL = "Please make your own decisions based on the current instructions."
NO_PREFERENCE = "No Preference."

# Any of these tokens marks a question about concrete UI mechanics, which the
# simulated user never helps with. Checked before the oracle is consulted.
LOW_LEVEL_UI_KEYWORDS = (
    "click", "tap", "scroll", "press", "swipe",
    "button", "checkbox", "icon", "slider", "toggle", "keyboard",
)
_LOW_LEVEL_RE = re.compile(
    r"\b(" + "|".join(LOW_LEVEL_UI_KEYWORDS) + r")\b", re.IGNORECASE)

# An intent-level question with no concrete slot ("what would you like?").
_OPEN_ENDED_RE = re.compile(
    r"\b(what|which)\b.*\b(want|like|need|order|get|buy|looking)\b", re.IGNORECASE)


def classify_inquiry(question: str, oracle: Oracle) -> InquiryKind:
    """Keyword pre-filter for UI mechanics, then the oracle for the rest."""
    if _LOW_LEVEL_RE.search(question):
        return InquiryKind.LOW_LEVEL_UI
    verdict = oracle.judge(OracleRequest(
        OraclePurpose.INQUIRY_CLASSIFY, {"question": question}))
    return InquiryKind(verdict.data["classification"])


def _mention_pattern(term: str) -> re.Pattern:
    return re.compile(rf"(?<![a-z0-9]){re.escape(term.lower())}(?![a-z0-9])")


def match_slots(question: str, intent: GroundTruthIntent) -> list[AtomicRequirement]:
    """Requirements the question explicitly asks about, in intent order.

    A requirement matches when its slot name, an alias, or its value appears
    in the question (word-bounded, case-insensitive).
    """
    q = question.lower()
    matched = []
    for r in intent.requirements:
        terms = (r.slot, *r.aliases, r.value)
        if any(_mention_pattern(t).search(q) for t in terms if t):
            matched.append(r)
    return matched


def reveal_text(requirements: list[AtomicRequirement]) -> str:
    return " ".join(f"I want {r.value} for the {r.slot}." for r in requirements)


@dataclass(frozen=True)
class InteractionTurn:
    """One ask/answer exchange plus the bookkeeping the auditor needs."""

    index: int
    question: str
    classification: InquiryKind
    asked_ids: tuple[str, ...]     # requirement ids the question named
    resolved_ids: tuple[str, ...]  # subset newly closed out of the gap
    response: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "question": self.question,
            "classification": self.classification.value,
            "asked_ids": list(self.asked_ids),
            "resolved_ids": list(self.resolved_ids),
            "response": self.response,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionTurn":
        return cls(
            index=d["index"], question=d["question"],
            classification=InquiryKind(d["classification"]),
            asked_ids=tuple(d["asked_ids"]), resolved_ids=tuple(d["resolved_ids"]),
            response=d["response"])


class UserSimulator:
    """Stateful reveal policy over one instruction's cognitive gap."""

    def __init__(self, task: Task, instruction: ObservedInstruction, oracle: Oracle):
        self.task = task
        self.instruction = instruction
        self.oracle = oracle
        self.gap = cognitive_gap(task.intent, instruction).missing_ids
        self.remaining_gap: set[str] = set(self.gap)
        self._counter = itertools.count()

    def respond(self, question: str) -> InteractionTurn:
        idx = next(self._counter)
        kind = classify_inquiry(question, self.oracle)
        asked: list[AtomicRequirement] = []
        resolved: tuple[str, ...] = ()
        if kind == InquiryKind.LOW_LEVEL_UI:
            response = REFUSAL
        elif self.instruction.clarity in (Clarity.DETAILED, Clarity.STANDARD):
            # The instruction already says everything; push back regardless
            # of what was asked.
            response = REFUSAL
        elif kind == InquiryKind.PARAMETER_SEEKING:
            asked = match_slots(question, self.task.intent)
            if not asked and _OPEN_ENDED_RE.search(question):
                # An intent-level question while the anchor itself is unknown
                # resolves to the missing anchors.
                asked = [
                    r for r in self.task.intent.requirements
                    if r.category == RequirementCategory.ANCHOR
                    and r.id in self.remaining_gap]
            if asked:
                response = reveal_text(asked)
                resolved = tuple(
                    r.id for r in asked if r.id in self.remaining_gap)
                self.remaining_gap -= set(resolved)
            else:
                response = NO_PREFERENCE
        else:
            response = REFUSAL
        return InteractionTurn(
            index=idx, question=question, classification=kind,
            asked_ids=tuple(r.id for r in asked), resolved_ids=resolved,
            response=response)


class SessionState(str, Enum):
    CREATED = "Created"
    INSTRUCTION_SERVED = "InstructionServed"
    RUNNING = "Running"
    FINISHED = "Finished"
    ABORTED = "Aborted"


class SessionError(Exception):
    """Protocol violation with a machine-readable code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


_CLOSED = (SessionState.FINISHED, SessionState.ABORTED)


class Session:
    """State machine around one (task, clarity) evaluation episode.

    Created -> InstructionServed -> Running -> Finished | Aborted. Serving
    the instruction is idempotent; asking and finishing after close raise
    SESSION_CLOSED.
    """

    def __init__(self, session_id: str, task: Task, clarity: Clarity, oracle: Oracle):
        instruction = task.instruction(clarity)
        if instruction is None:
            raise SessionError(
                "TASK_LEVEL_UNAVAILABLE",
                f"task '{task.task_id}' has no {clarity.value} instruction")
        self.session_id = session_id
        self.task = task
        self.clarity = clarity
        self.simulator = UserSimulator(task, instruction, oracle)
        self.state = SessionState.CREATED
        self.turns: list[InteractionTurn] = []
        self.finish_reason: str | None = None
        self._lock = threading.Lock()

    @property
    def instruction(self) -> ObservedInstruction:
        return self.simulator.instruction

    def serve_instruction(self) -> str:
        with self._lock:
            if self.state in _CLOSED:
                raise SessionError("SESSION_CLOSED", self.state.value)
            if self.state == SessionState.CREATED:
                self.state = SessionState.INSTRUCTION_SERVED
            return self.instruction.text

    def ask(self, question: str) -> str:
        with self._lock:
            if self.state in _CLOSED:
                raise SessionError("SESSION_CLOSED", self.state.value)
            if self.state == SessionState.CREATED:
                raise SessionError(
                    "INSTRUCTION_NOT_SERVED", "agent asked before reading the instruction")
            self.state = SessionState.RUNNING
            turn = self.simulator.respond(question)
            self.turns.append(turn)
            return turn.response

    def mark_running(self) -> None:
        """Called on the first device action; a no-op once running."""
        with self._lock:
            if self.state in _CLOSED:
                raise SessionError("SESSION_CLOSED", self.state.value)
            self.state = SessionState.RUNNING

    def finish(self, reason: str = "AGENT_DONE") -> SessionState:
        """Agent-initiated completion."""
        with self._lock:
            if self.state in _CLOSED:
                raise SessionError("SESSION_CLOSED", self.state.value)
            self.state = SessionState.FINISHED
            self.finish_reason = reason
            return self.state

    def abort(self, reason: str) -> SessionState:
        """Harness-initiated termination (budget, timeout, error)."""
        with self._lock:
            if self.state in _CLOSED:
                return self.state
            self.state = SessionState.ABORTED
            self.finish_reason = reason
            return self.state

    def turn_log(self) -> list[dict]:
        return [t.to_dict() for t in self.turns]
