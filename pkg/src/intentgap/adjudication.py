"""Trajectory adjudication: from captured evidence to a per-episode verdict.

Phase one of a run captures raw evidence (trace, snapshots, turn log); this
module is phase two. It rewrites the trace into semantic steps, scores the
outcome per requirement, diagnoses the termination point, aligns executed
steps against the golden key steps with a longest-common-subsequence match,
marks redundant steps, and audits the question turns for violations. All
oracle-dependent judgments go through the oracle gateway so the whole phase
replays bit-exactly from a recorded audit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from .oracle import InquiryKind, Oracle, OracleError, OraclePurpose, OracleRequest
from .sandbox.mockdevice import _noop_operation
from .sandbox.trace import Snapshot
from .sandbox.wire import decode_shell_command
from .simulator import _OPEN_ENDED_RE, InteractionTurn, match_slots
from .taskmodel import GroundTruthIntent, ReferenceTrajectory, Task

logger = logging.getLogger(__name__)

PAGE_TRANSITION = "Page Transition"
NO_CHANGE = "No Change"
UNDESCRIBED = "Undescribed"


@dataclass(frozen=True)
class SemanticStep:
    """One executed device action in semantic form: page, objects visible,
    the operation performed, and the feedback observed."""

    index: int
    page: str
    objects: tuple[str, ...]
    action: str
    feedback: str
    described: bool = True
    audit_goals: dict | None = None  # capture-channel goal state, if any

    def text(self) -> str:
        return f"{self.page} | {self.action} | {self.feedback}"

    def to_dict(self) -> dict:
        return {
            "index": self.index, "page": self.page, "objects": list(self.objects),
            "action": self.action, "feedback": self.feedback,
            "described": self.described, "audit_goals": self.audit_goals,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticStep":
        return cls(
            index=d["index"], page=d["page"], objects=tuple(d["objects"]),
            action=d["action"], feedback=d["feedback"],
            described=d.get("described", True), audit_goals=d.get("audit_goals"))


def _undescribed(index: int, command: str) -> SemanticStep:
    op = _noop_operation(decode_shell_command(command))
    return SemanticStep(
        index=index, page=UNDESCRIBED, objects=(), action=op,
        feedback="Unknown", described=False, audit_goals=None)


def serialize_step(index: int, record: dict, oracle: Oracle) -> SemanticStep:
    """Rewrite one action record into a semantic step.

    With a structured post-snapshot everything is mechanical. Without one,
    the page and objects come from an oracle description of the captured
    frame; a failed description yields an undescribed step that can never
    match a key step.
    """
    pre = Snapshot.from_dict(record.get("pre"))
    post = Snapshot.from_dict(record.get("post"))
    command = record["command"]

    if post.doc is not None:
        audit = post.doc.get("audit", {})
        operation = audit.get("last_operation") or _noop_operation(
            decode_shell_command(command))
        pre_page = pre.doc.get("page") if pre.doc else None
        post_page = post.doc["page"]
        if pre_page is not None and pre_page != post_page:
            feedback = PAGE_TRANSITION
        elif audit.get("last_feedback"):
            feedback = audit["last_feedback"]
        else:
            feedback = NO_CHANGE
        return SemanticStep(
            index=index, page=post_page,
            objects=tuple(e["label"] for e in post.doc.get("elements", ())),
            action=operation, feedback=feedback,
            audit_goals=audit.get("goals"))

    if post.png_digest is not None:
        try:
            verdict = oracle.judge(OracleRequest(
                OraclePurpose.PAGE_DESCRIBE,
                {"observation": f"frame {post.png_digest}"}))
        except OracleError as exc:
            logger.warning("page description failed at step %d: %s", index, exc)
            return _undescribed(index, command)
        pre_page = pre.doc.get("page") if pre.doc else None
        page = verdict.data["page"]
        op = _noop_operation(decode_shell_command(command))
        feedback = PAGE_TRANSITION if pre_page not in (None, page) else NO_CHANGE
        return SemanticStep(
            index=index, page=page, objects=tuple(verdict.data["objects"]),
            action=op, feedback=feedback)

    return _undescribed(index, command)


def serialize_trajectory(records: list[dict], oracle: Oracle) -> list[SemanticStep]:
    actions = [r for r in records if r.get("type") == "action"]
    return [serialize_step(i, r, oracle) for i, r in enumerate(actions)]


# ---------------------------------------------------------------------------
# Outcome


def step_evidence(
    steps: list[SemanticStep], intent: GroundTruthIntent, oracle: Oracle
) -> list[dict[str, bool]]:
    """Per-step requirement satisfaction.

    The capture-channel goal state is authoritative when present; otherwise
    each (requirement, step) pair is judged from the step text.
    """
    out = []
    for step in steps:
        if step.audit_goals is not None:
            out.append({
                r.id: bool(step.audit_goals.get(r.id, False))
                for r in intent.requirements})
            continue
        row = {}
        for r in intent.requirements:
            if not step.described:
                row[r.id] = False
                continue
            verdict = oracle.judge(OracleRequest(
                OraclePurpose.REQUIREMENT_EVIDENCE,
                {"value": r.value, "step_text": step.text()}))
            row[r.id] = verdict.data["evidenced"]
        out.append(row)
    return out


class Outcome(str, Enum):
    SUCCESS = "Success"
    PARTIAL_SUCCESS = "PartialSuccess"
    FAILURE = "Failure"


def outcome_vector(evidence: list[dict[str, bool]], intent: GroundTruthIntent) -> list[int]:
    """v_i is 1 iff some step evidences requirement i, in intent order."""
    return [
        int(any(row[r.id] for row in evidence)) for r in intent.requirements
    ]


def outcome_label(vector: list[int]) -> Outcome:
    if min(vector) == 1:
        return Outcome.SUCCESS
    if max(vector) == 0:
        return Outcome.FAILURE
    return Outcome.PARTIAL_SUCCESS


# ---------------------------------------------------------------------------
# Termination


class Termination(str, Enum):
    EARLY = "Early"
    NORMAL = "Normal"
    DELAYED = "Delayed"


def goal_closure_step(evidence: list[dict[str, bool]], intent: GroundTruthIntent) -> int | None:
    """First step index by which every requirement has been evidenced."""
    pending = set(intent.ids())
    for t, row in enumerate(evidence):
        pending -= {rid for rid, ok in row.items() if ok}
        if not pending:
            return t
    return None


def diagnose_termination(
    evidence: list[dict[str, bool]], intent: GroundTruthIntent
) -> tuple[Termination, int | None]:
    """Rule-based split: never closing the goal is Early (budget exhaustion
    included), actions after closure are Delayed, closing on the final
    action is Normal. An empty trace is Early."""
    if not evidence:
        return Termination.EARLY, None
    goal_step = goal_closure_step(evidence, intent)
    if goal_step is None:
        return Termination.EARLY, None
    if goal_step < len(evidence) - 1:
        return Termination.DELAYED, goal_step
    return Termination.NORMAL, goal_step


# ---------------------------------------------------------------------------
# Process inspection: key-step alignment and redundancy


def match_matrix(
    reference: ReferenceTrajectory, steps: list[SemanticStep], oracle: Oracle
) -> list[list[bool]]:
    """m x T semantic-equivalence matrix; undescribed steps never match."""
    matrix = []
    for key in reference.key_steps:
        row = []
        for step in steps:
            if not step.described:
                row.append(False)
                continue
            verdict = oracle.judge(OracleRequest(
                OraclePurpose.SEMANTIC_MATCH,
                {"candidate": step.action, "reference": key.description}))
            row.append(verdict.data["match"])
        matrix.append(row)
    return matrix


def lcs_align(matrix: list[list[bool]]) -> tuple[int, list[int], list[int]]:
    """Longest in-order alignment of key steps to executed steps.

    Returns (length, key indices, step indices). Ties break to the
    lexicographically earliest key-index set, then the earliest executed-
    step set, so verdicts are deterministic.
    """
    m = len(matrix)
    T = len(matrix[0]) if m else 0
    # L[j][t] = best alignment size using keys j.. and steps t..
    L = [[0] * (T + 1) for _ in range(m + 1)]
    for j in range(m - 1, -1, -1):
        for t in range(T - 1, -1, -1):
            best = max(L[j + 1][t], L[j][t + 1])
            if matrix[j][t]:
                best = max(best, 1 + L[j + 1][t + 1])
            L[j][t] = best
    need = L[0][0] if m and T else 0
    keys: list[int] = []
    stepsel: list[int] = []
    j0, t0 = 0, 0
    while need > 0:
        placed = False
        for j in range(j0, m):
            if L[j][t0] < need:
                break  # suffixes only get shorter as j grows
            for t in range(t0, T):
                if matrix[j][t] and 1 + L[j + 1][t + 1] == need:
                    keys.append(j)
                    stepsel.append(t)
                    j0, t0 = j + 1, t + 1
                    need -= 1
                    placed = True
                    break
            if placed:
                break
        if not placed:  # pragma: no cover - DP guarantees progress
            raise AssertionError("alignment extraction lost the optimum")
    return len(keys), keys, stepsel


def step_vector(reference: ReferenceTrajectory, matched_keys: list[int]) -> list[int]:
    chosen = set(matched_keys)
    return [int(j in chosen) for j in range(len(reference.key_steps))]


# A cycle is the same page/operation pair observed this many times in a row.
REPEAT_CYCLE_LENGTH = 3


def redundant_steps(
    steps: list[SemanticStep], matched_steps: list[int], oracle: Oracle
) -> list[int]:
    """Indices of redundant executed steps.

    Only non-matched steps are eligible: a step is redundant when the oracle
    judges its feedback to show no progress, or when it sits inside an exact
    repeat cycle (identical page and operation at least three in a row).
    """
    matched = set(matched_steps)
    redundant: set[int] = set()
    for step in steps:
        if step.index in matched:
            continue
        verdict = oracle.judge(OracleRequest(
            OraclePurpose.REDUNDANCY_JUDGE, {"feedback": step.feedback}))
        if verdict.data["redundant"]:
            redundant.add(step.index)
    run: list[int] = []
    prev_key = None
    for step in steps:
        key = (step.page, step.action)
        if key == prev_key:
            run.append(step.index)
        else:
            run = [step.index]
            prev_key = key
        if len(run) >= REPEAT_CYCLE_LENGTH:
            redundant.update(i for i in run if i not in matched)
    return sorted(redundant)


# ---------------------------------------------------------------------------
# Interaction audit


class TurnViolation(str, Enum):
    REPETITIVE = "Repetitive"
    OUT_OF_SCOPE = "OutOfScope"
    CONTEXT_MISSING = "ContextMissing"
    TRIVIAL_EXECUTION = "TrivialExecution"


# Crude but deterministic: an enumeration ("A or B", commas, a colon list)
# counts as presenting options.
def _presents_options(question: str) -> bool:
    lowered = question.lower()
    return " or " in lowered or "," in question or ":" in question


def audit_turn(
    turn: InteractionTurn,
    intent: GroundTruthIntent,
    established: set[str],
) -> TurnViolation | None:
    """Label one turn with its first violation, in fixed precedence order."""
    named = [r.id for r in match_slots(turn.question, intent)]
    if named and set(named) <= established:
        return TurnViolation.REPETITIVE
    if turn.classification == InquiryKind.PARAMETER_SEEKING and not named:
        if _OPEN_ENDED_RE.search(turn.question):
            if not _presents_options(turn.question):
                return TurnViolation.CONTEXT_MISSING
        else:
            return TurnViolation.OUT_OF_SCOPE
    if turn.classification == InquiryKind.LOW_LEVEL_UI:
        return TurnViolation.TRIVIAL_EXECUTION
    return None


@dataclass(frozen=True)
class TurnAudit:
    index: int
    violation: TurnViolation | None
    resolved_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "violation": self.violation.value if self.violation else None,
            "resolved_ids": list(self.resolved_ids),
        }


def audit_turns(
    turns: list[InteractionTurn],
    intent: GroundTruthIntent,
    covered_ids: frozenset[str],
) -> list[TurnAudit]:
    """Audit the whole dialogue.

    ``established`` starts at the instruction's coverage and grows with
    every revealed slot, violating turns included: a slot revealed once is
    established no matter how the turn was labelled.
    """
    audits = []
    established = set(covered_ids)
    for turn in turns:
        violation = audit_turn(turn, intent, established)
        audits.append(TurnAudit(
            index=turn.index, violation=violation,
            resolved_ids=turn.resolved_ids))
        established |= set(turn.resolved_ids)
    return audits


def gap_fill(audits: list[TurnAudit]) -> set[str]:
    """Union of slots resolved by non-violating turns only."""
    filled: set[str] = set()
    for a in audits:
        if a.violation is None:
            filled |= set(a.resolved_ids)
    return filled


# ---------------------------------------------------------------------------
# Episode verdict


@dataclass(frozen=True)
class EpisodeVerdict:
    """Everything the metrics layer needs about one evaluated episode."""

    task_id: str
    clarity: str
    outcome_vector: list[int]
    outcome: str
    step_vector: list[int]
    matched_steps: list[int]
    redundant_steps: list[int]
    executed_steps: int
    termination: str
    goal_step: int | None
    turn_audits: list[dict]
    turn_count: int
    violation_count: int
    gap_ids: list[str]
    gap_filled_ids: list[str]
    gain_score: float
    gain_eligible: bool
    finish_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "clarity": self.clarity,
            "outcome_vector": self.outcome_vector,
            "outcome": self.outcome,
            "step_vector": self.step_vector,
            "matched_steps": self.matched_steps,
            "redundant_steps": self.redundant_steps,
            "executed_steps": self.executed_steps,
            "termination": self.termination,
            "goal_step": self.goal_step,
            "turn_audits": self.turn_audits,
            "turn_count": self.turn_count,
            "violation_count": self.violation_count,
            "gap_ids": self.gap_ids,
            "gap_filled_ids": self.gap_filled_ids,
            "gain_score": self.gain_score,
            "gain_eligible": self.gain_eligible,
            "finish_reason": self.finish_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeVerdict":
        return cls(**{k: d[k] for k in (
            "task_id", "clarity", "outcome_vector", "outcome", "step_vector",
            "matched_steps", "redundant_steps", "executed_steps", "termination",
            "goal_step", "turn_audits", "turn_count", "violation_count",
            "gap_ids", "gap_filled_ids", "gain_score", "gain_eligible",
            "finish_reason")})


def adjudicate_episode(
    task: Task,
    clarity,
    trace_records: list[dict],
    turns: list[InteractionTurn],
    oracle: Oracle,
    finish_reason: str | None = None,
) -> EpisodeVerdict:
    """Full phase-two pipeline for one episode."""
    instruction = task.instruction(clarity)
    if instruction is None:
        raise KeyError(f"task '{task.task_id}' has no {clarity.value} instruction")
    gap = sorted(task.intent.ids() - instruction.covered_ids)

    steps = serialize_trajectory(trace_records, oracle)
    evidence = step_evidence(steps, task.intent, oracle)
    outcomes = outcome_vector(evidence, task.intent)
    termination, goal_step = diagnose_termination(evidence, task.intent)

    matrix = match_matrix(task.reference, steps, oracle)
    _, matched_keys, matched_steps = lcs_align(matrix)
    step_marks = step_vector(task.reference, matched_keys)
    redundant = redundant_steps(steps, matched_steps, oracle)

    audits = audit_turns(turns, task.intent, instruction.covered_ids)
    filled = gap_fill(audits) & set(gap)
    violations = sum(1 for a in audits if a.violation is not None)
    gain_eligible = len(gap) > 0
    gain = (len(filled) / len(gap)) if gain_eligible else 1.0

    return EpisodeVerdict(
        task_id=task.task_id,
        clarity=clarity.value,
        outcome_vector=outcomes,
        outcome=outcome_label(outcomes).value,
        step_vector=step_marks,
        matched_steps=matched_steps,
        redundant_steps=redundant,
        executed_steps=len(steps),
        termination=termination.value,
        goal_step=goal_step,
        turn_audits=[a.to_dict() for a in audits],
        turn_count=len(turns),
        violation_count=violations,
        gap_ids=gap,
        gap_filled_ids=sorted(filled),
        gain_score=gain,
        gain_eligible=gain_eligible,
        finish_reason=finish_reason,
    )
