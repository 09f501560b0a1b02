"""Instruction derivation: legitimacy gate and the four clarity transforms.

Given a validated intent plus its reference trajectory, each transform
produces one instruction text deterministically (byte-identical across
runs): full-path serialization for Detailed, path exclusion for Standard,
parameter masking for Incomplete, and hypernym substitution for Ambiguous.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .taskmodel import (
    AtomicRequirement,
    Clarity,
    CognitiveGap,
    GroundTruthIntent,
    IntentOrigin,
    ObservedInstruction,
    ReferenceTrajectory,
    RequirementCategory,
    RequirementNature,
    Task,
    ValidationError,
    cognitive_gap,
)


class LegitimacyDecision(str, Enum):
    RETAIN = "Retain"
    CONVERT = "Convert"
    EXCLUDE = "Exclude"


@dataclass(frozen=True)
class LegitimacyVerdict:
    decision: LegitimacyDecision
    reason: str


def legitimacy_gate(nature: RequirementNature, origin: IntentOrigin) -> LegitimacyVerdict:
    """Decide whether a candidate requirement set enters the benchmark.

    Prior requirements of either nature are retained: the user held them
    before acting, so withholding them from the instruction is a legitimate
    gap. Posterior functional requirements are objective enough to convert
    into a fixed pseudo-prior objective. Posterior value-laden requirements
    are hindsight taste and are excluded.
    """
    if origin == IntentOrigin.PRIOR:
        return LegitimacyVerdict(
            LegitimacyDecision.RETAIN, "requirement held prior to execution")
    if nature == RequirementNature.FUNCTIONAL:
        return LegitimacyVerdict(
            LegitimacyDecision.CONVERT,
            "objective posterior requirement frozen into a pseudo-prior objective")
    return LegitimacyVerdict(
        LegitimacyDecision.EXCLUDE, "subjective hindsight preference")


def convert_posterior(nature: RequirementNature, origin: IntentOrigin) -> tuple[IntentOrigin, bool]:
    """Apply the gate's Convert arm: returns (effective origin, converted flag).

    Raises ValidationError for an excluded combination.
    """
    verdict = legitimacy_gate(nature, origin)
    if verdict.decision == LegitimacyDecision.EXCLUDE:
        raise ValidationError(f"LEGITIMACY_EXCLUDED: {verdict.reason}")
    if verdict.decision == LegitimacyDecision.CONVERT:
        return IntentOrigin.PRIOR, True
    return origin, origin == IntentOrigin.POSTERIOR


class MaskingBypass(Exception):
    """Signals that an intent has no maskable parameter, so the Incomplete
    level does not exist for it (the task keeps its other three levels)."""

    def __init__(self, task_hint: str = ""):
        super().__init__(
            f"no maskable Explicit/Implicit parameter{': ' + task_hint if task_hint else ''}")


class HypernymError(ValidationError):
    """An anchor has no hypernym entry, or the entry is not an abstraction."""


# Step verbs excluded from Standard-level text. Configurable so app-specific
# phrasing (e.g. "long-press") can be appended without a code change.
DEFAULT_PATH_VERBS = ("open", "navigate", "tap", "click", "scroll", "press")


@dataclass(frozen=True)
class HypernymTable:
    """Anchor value -> generalized phrase, e.g. "Filet-O-Fish Meal" ->
    "a hamburger meal". Entries carry their own article so templates can
    splice them verbatim."""

    entries: dict[str, str]

    @classmethod
    def load(cls, path: str | Path) -> "HypernymTable":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def lookup(self, value: str) -> str:
        if value not in self.entries:
            raise HypernymError(f"no hypernym entry for anchor value '{value}'")
        phrase = self.entries[value]
        # A hypernym must abstract away the original surface form, not echo it.
        if value.lower() in phrase.lower():
            raise HypernymError(
                f"hypernym '{phrase}' still contains the anchor value '{value}'")
        return phrase


def _anchor_phrase(intent: GroundTruthIntent) -> str:
    anchors = [r for r in intent.requirements if r.category == RequirementCategory.ANCHOR]
    return " ".join(r.value for r in anchors)


def _parameters(intent: GroundTruthIntent) -> list[AtomicRequirement]:
    return [r for r in intent.requirements if r.is_parameter]


def _param_clause(r: AtomicRequirement) -> str:
    return f"choose {r.value} for the {r.slot}"


def _sentence(parts: list[str]) -> str:
    body = "; ".join(parts)
    return body[0].upper() + body[1:] + "."


def derive_standard(intent: GroundTruthIntent, app: str) -> ObservedInstruction:
    """Path exclusion: state every requirement, no step-by-step UI verbs."""
    parts = [f"get the {_anchor_phrase(intent)} in {app}"]
    parts += [_param_clause(r) for r in _parameters(intent)]
    text = _sentence(parts)
    _assert_no_path_verbs(text)
    return ObservedInstruction(
        text=text, clarity=Clarity.STANDARD, covered_ids=frozenset(intent.ids()))


def derive_detailed(
    intent: GroundTruthIntent, app: str, reference: ReferenceTrajectory
) -> ObservedInstruction:
    """Full-path serialization: the Standard content interleaved with the
    golden trace's key steps, so the text encodes the UI path itself."""
    if not reference.key_steps:
        raise ValidationError("REFERENCE_EMPTY: cannot serialize a path from no key steps")
    standard = derive_standard(intent, app)
    steps = "; then ".join(s.description for s in reference.key_steps)
    text = f"{standard.text} Follow these steps: {steps}."
    return ObservedInstruction(
        text=text, clarity=Clarity.DETAILED,
        covered_ids=frozenset(intent.ids()), includes_path=True)


def derive_incomplete(
    intent: GroundTruthIntent, app: str, mask: frozenset[str] | None = None
) -> ObservedInstruction:
    """Parameter masking: omit the masked parameters from the Standard text.

    ``mask`` defaults to every parameter id. It must be a non-empty subset of
    the parameter ids; anchors are never maskable here. Raises MaskingBypass
    when the intent has no parameters at all.
    """
    params = _parameters(intent)
    if not params:
        raise MaskingBypass(_anchor_phrase(intent))
    param_ids = {r.id for r in params}
    if mask is None:
        mask = frozenset(param_ids)
    if not mask:
        raise ValidationError("mask must omit at least one parameter")
    illegal = set(mask) - param_ids
    if illegal:
        raise ValidationError(
            "mask contains non-parameter ids: " + ", ".join(sorted(illegal)))
    parts = [f"get the {_anchor_phrase(intent)} in {app}"]
    parts += [_param_clause(r) for r in params if r.id not in mask]
    text = _sentence(parts)
    return ObservedInstruction(
        text=text, clarity=Clarity.INCOMPLETE,
        covered_ids=frozenset(intent.ids() - mask))


def derive_ambiguous(
    intent: GroundTruthIntent, app: str, hypernyms: HypernymTable
) -> ObservedInstruction:
    """Hypernym substitution: generalize every anchor, drop every parameter.

    The resulting instruction covers nothing, so the cognitive gap is the
    whole intent.
    """
    anchors = [r for r in intent.requirements if r.category == RequirementCategory.ANCHOR]
    if not anchors:
        raise ValidationError("ANCHOR_MISSING: nothing to generalize")
    phrase = " and ".join(hypernyms.lookup(r.value) for r in anchors)
    text = f"Get {phrase} in {app}."
    return ObservedInstruction(
        text=text, clarity=Clarity.AMBIGUOUS, covered_ids=frozenset())


def _assert_no_path_verbs(text: str, verbs: tuple[str, ...] = DEFAULT_PATH_VERBS) -> None:
    lowered = text.lower()
    for verb in verbs:
        if re.search(rf"\b{re.escape(verb)}\b", lowered):
            raise ValidationError(f"PATH_VERB: '{verb}' appears in a path-free instruction")


def derive_instruction(
    task: Task,
    clarity: Clarity,
    hypernyms: HypernymTable | None = None,
    mask: frozenset[str] | None = None,
) -> ObservedInstruction:
    """Derive one instruction for ``clarity`` from the task's intent.

    Detailed needs the reference trajectory, Ambiguous a hypernym table.
    Incomplete raises MaskingBypass on a parameterless intent.
    """
    if clarity == Clarity.DETAILED:
        return derive_detailed(task.intent, task.app, task.reference)
    if clarity == Clarity.STANDARD:
        return derive_standard(task.intent, task.app)
    if clarity == Clarity.INCOMPLETE:
        return derive_incomplete(task.intent, task.app, mask)
    if hypernyms is None:
        raise ValidationError("hypernym table required for Ambiguous derivation")
    return derive_ambiguous(task.intent, task.app, hypernyms)


def derive_all(task: Task, hypernyms: HypernymTable) -> dict[Clarity, ObservedInstruction]:
    """All levels the intent admits; Incomplete is skipped on bypass."""
    out: dict[Clarity, ObservedInstruction] = {}
    for clarity in Clarity:
        try:
            out[clarity] = derive_instruction(task, clarity, hypernyms)
        except MaskingBypass:
            continue
    return out


def gap_for(task: Task, clarity: Clarity) -> CognitiveGap:
    instr = task.instruction(clarity)
    if instr is None:
        raise KeyError(f"task '{task.task_id}' has no {clarity.value} instruction")
    return cognitive_gap(task.intent, instr)
