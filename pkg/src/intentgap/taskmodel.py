"""Task and intent data model: atomic requirements, instructions, clarity levels.

A benchmark task pairs a determinate set of atomic user requirements (the
ground-truth intent) with one natural-language instruction per clarity level.
The delta between what the intent demands and what an instruction states is
the cognitive gap; everything downstream (simulator behaviour, interaction
auditing, gain scoring) is driven by that set difference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class RequirementCategory(str, Enum):
    ANCHOR = "Anchor"
    EXPLICIT = "Explicit"
    IMPLICIT = "Implicit"


class Clarity(str, Enum):
    DETAILED = "Detailed"
    STANDARD = "Standard"
    INCOMPLETE = "Incomplete"
    AMBIGUOUS = "Ambiguous"


class Domain(str, Enum):
    ECOMMERCE = "E-commerce"
    SOCIAL = "Social"
    PRODUCTIVITY = "Productivity"
    DEVICE_SYSTEM = "DeviceSystem"
    INFO_RETRIEVAL = "InfoRetrieval"


class Difficulty(str, Enum):
    SIMPLE = "Simple"
    MEDIUM = "Medium"
    HARD = "Hard"


class RequirementNature(str, Enum):
    FUNCTIONAL = "Functional"
    VALUE_LADEN = "ValueLaden"


class IntentOrigin(str, Enum):
    PRIOR = "Prior"
    POSTERIOR = "Posterior"


class ValidationError(ValueError):
    """Raised when an operation receives structurally invalid model data."""


@dataclass(frozen=True)
class AtomicRequirement:
    """One indivisible constraint on the task outcome.

    ``non_default`` marks that the ground-truth value deliberately differs
    from the system default (the default itself goes in ``default_value``),
    so an agent cannot satisfy the requirement by leaving controls untouched.
    ``aliases`` are alternative slot names accepted by the user simulator's
    question matcher (e.g. "drink" for slot "beverage").
    """

    id: str
    category: RequirementCategory
    slot: str
    value: str
    non_default: bool = False
    default_value: str | None = None
    aliases: tuple[str, ...] = ()

    @property
    def is_parameter(self) -> bool:
        return self.category in (RequirementCategory.EXPLICIT, RequirementCategory.IMPLICIT)


@dataclass(frozen=True)
class GroundTruthIntent:
    """Ordered list of atomic requirements held by the user simulator."""

    requirements: tuple[AtomicRequirement, ...]

    def __post_init__(self):
        object.__setattr__(self, "requirements", tuple(self.requirements))

    def ids(self) -> set[str]:
        return {r.id for r in self.requirements}

    def anchor_ids(self) -> set[str]:
        return {r.id for r in self.requirements if r.category == RequirementCategory.ANCHOR}

    def parameter_ids(self) -> set[str]:
        return {r.id for r in self.requirements if r.is_parameter}

    def by_id(self, rid: str) -> AtomicRequirement:
        for r in self.requirements:
            if r.id == rid:
                return r
        raise KeyError(rid)


@dataclass(frozen=True)
class ObservedInstruction:
    """The natural-language text the agent receives, plus curation metadata.

    ``covered_ids`` is the set of requirement ids the text explicitly
    expresses; it is stored with the task rather than re-extracted from the
    text, keeping evaluation deterministic.
    """

    text: str
    clarity: Clarity
    covered_ids: frozenset[str]
    includes_path: bool = False

    def __post_init__(self):
        object.__setattr__(self, "covered_ids", frozenset(self.covered_ids))


@dataclass(frozen=True)
class KeyStep:
    index: int
    description: str
    page: str


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Human-recorded golden trace: the ordered key steps of the task."""

    key_steps: tuple[KeyStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "key_steps", tuple(self.key_steps))


@dataclass(frozen=True)
class CognitiveGap:
    """Requirement ids the instruction fails to convey."""

    missing_ids: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "missing_ids", frozenset(self.missing_ids))

    def __len__(self) -> int:
        return len(self.missing_ids)


@dataclass(frozen=True)
class InjectionCommand:
    kind: str  # ShellCommand | SettingPut | AppDataReset | AccountLogin
    payload: dict

    KINDS = ("ShellCommand", "SettingPut", "AppDataReset", "AccountLogin")


@dataclass(frozen=True)
class StateInjectionSpec:
    """Ordered device-preparation commands run before the first agent action."""

    commands: tuple[InjectionCommand, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "commands", tuple(self.commands))


@dataclass(frozen=True)
class Task:
    """One benchmark unit: intent, per-clarity instructions, golden trace."""

    task_id: str
    app: str
    domain: Domain
    intent: GroundTruthIntent
    instructions: dict[Clarity, ObservedInstruction]
    reference: ReferenceTrajectory
    injection_spec: StateInjectionSpec = StateInjectionSpec()
    requirement_nature: RequirementNature = RequirementNature.FUNCTIONAL
    intent_origin: IntentOrigin = IntentOrigin.PRIOR
    converted_from_posterior: bool = False
    mock_app: str | None = None

    def instruction(self, clarity: Clarity) -> ObservedInstruction | None:
        return self.instructions.get(clarity)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def cognitive_gap(intent: GroundTruthIntent, instruction: ObservedInstruction) -> CognitiveGap:
    """Set difference between the intent's requirement ids and the covered ids.

    Raises ValidationError if the instruction claims coverage of an id the
    intent does not define.
    """
    ids = intent.ids()
    unknown = instruction.covered_ids - ids
    if unknown:
        raise ValidationError(
            "covered_ids not in intent: " + ", ".join(sorted(unknown))
        )
    return CognitiveGap(frozenset(ids - instruction.covered_ids))


def classify_clarity(instruction: ObservedInstruction, intent: GroundTruthIntent) -> Clarity:
    """Classify an instruction by how its coverage relates to the intent.

    Full coverage with an encoded UI path is Detailed; full coverage without
    one is Standard; all anchors but a missing parameter is Incomplete; a
    missing anchor is Ambiguous. Total over all valid inputs.
    """
    ids = intent.ids()
    anchors = intent.anchor_ids()
    covered = instruction.covered_ids & ids
    if anchors - covered:
        return Clarity.AMBIGUOUS
    if ids - covered:
        return Clarity.INCOMPLETE
    return Clarity.DETAILED if instruction.includes_path else Clarity.STANDARD


# Tier boundaries by requirement count; _TIER_BOUNDS is a test hook only.
_TIER_BOUNDS = {"simple_max": 2, "medium_max": 4}


def difficulty_tier(intent: GroundTruthIntent) -> Difficulty:
    """Map requirement count to Simple (1-2), Medium (3-4), Hard (5+)."""
    n = len(intent.requirements)
    if n <= _TIER_BOUNDS["simple_max"]:
        return Difficulty.SIMPLE
    if n <= _TIER_BOUNDS["medium_max"]:
        return Difficulty.MEDIUM
    return Difficulty.HARD


def validate_intent(intent: GroundTruthIntent) -> list[Violation]:
    out: list[Violation] = []
    seen: set[str] = set()
    for r in intent.requirements:
        if r.id in seen:
            out.append(Violation("DUPLICATE_ID", f"requirement id '{r.id}' repeats"))
        seen.add(r.id)
        if not r.value:
            out.append(Violation("EMPTY_VALUE", f"requirement '{r.id}' has no value"))
        if r.non_default:
            if r.default_value is None:
                out.append(Violation(
                    "DEFAULT_VALUE_MISSING",
                    f"requirement '{r.id}' is non-default but states no default_value"))
            elif r.default_value == r.value:
                out.append(Violation(
                    "DEFAULT_VALUE_USED",
                    f"requirement '{r.id}' value equals the system default '{r.default_value}'"))
    if not intent.anchor_ids():
        out.append(Violation("ANCHOR_MISSING", "intent has no Anchor requirement"))
    return out


def validate_task(task: Task) -> list[Violation]:
    """Check every structural invariant of a task; empty report means valid.

    Beyond intent well-formedness this enforces the per-clarity coverage
    rules, the forced non-default principle for every maskable parameter,
    the Incomplete bypass rule, and the legitimacy gate.
    """
    # imported here: derivation depends on this module for types
    from .derivation import LegitimacyDecision, legitimacy_gate

    out = validate_intent(task.intent)
    ids = task.intent.ids()
    anchors = task.intent.anchor_ids()
    params = task.intent.parameter_ids()

    # Every parameter that could be masked out of an instruction must be
    # pinned to a non-default value, else an idle agent scores it for free.
    for rid in sorted(params):
        r = task.intent.by_id(rid)
        if not r.non_default:
            out.append(Violation(
                "DEFAULT_VALUE_USED",
                f"maskable parameter '{rid}' is not forced off the system default"))

    for clarity in (Clarity.DETAILED, Clarity.STANDARD, Clarity.AMBIGUOUS):
        if clarity not in task.instructions:
            out.append(Violation("LEVEL_MISSING", f"no {clarity.value} instruction"))

    if Clarity.INCOMPLETE not in task.instructions and params:
        out.append(Violation(
            "LEVEL_MISSING",
            "Incomplete instruction absent although the intent has maskable parameters"))
    if Clarity.INCOMPLETE in task.instructions and not params:
        out.append(Violation(
            "BYPASS_VIOLATED",
            "Incomplete instruction present on an intent with no maskable parameters"))

    for clarity, instr in sorted(task.instructions.items(), key=lambda kv: kv[0].value):
        if instr.clarity != clarity:
            out.append(Violation(
                "CLARITY_MISMATCH",
                f"instruction stored under {clarity.value} declares {instr.clarity.value}"))
            continue
        unknown = instr.covered_ids - ids
        if unknown:
            out.append(Violation(
                "UNKNOWN_COVERED_ID",
                f"{clarity.value} covers unknown ids: {', '.join(sorted(unknown))}"))
            continue
        actual = classify_clarity(instr, task.intent)
        if actual != clarity:
            out.append(Violation(
                "CLARITY_MISMATCH",
                f"{clarity.value} instruction classifies as {actual.value}"))
        if clarity == Clarity.DETAILED and not instr.includes_path:
            out.append(Violation("PATH_FLAG", "Detailed instruction must encode the UI path"))
        if clarity == Clarity.STANDARD and instr.includes_path:
            out.append(Violation("PATH_FLAG", "Standard instruction must not encode the UI path"))
        if clarity == Clarity.INCOMPLETE:
            if anchors - instr.covered_ids:
                out.append(Violation(
                    "CLARITY_MISMATCH", "Incomplete instruction omits an anchor"))
            if not (ids - instr.covered_ids):
                out.append(Violation(
                    "CLARITY_MISMATCH", "Incomplete instruction omits no parameter"))

    if not task.reference.key_steps:
        out.append(Violation("REFERENCE_EMPTY", "reference trajectory has no key steps"))
    else:
        indices = [s.index for s in task.reference.key_steps]
        if indices != sorted(indices) or len(set(indices)) != len(indices):
            out.append(Violation("REFERENCE_ORDER", "key step indices not strictly increasing"))

    for cmd in task.injection_spec.commands:
        if cmd.kind not in InjectionCommand.KINDS:
            out.append(Violation("INJECTION_KIND", f"unknown injection kind '{cmd.kind}'"))

    origin = IntentOrigin.PRIOR if task.converted_from_posterior else task.intent_origin
    verdict = legitimacy_gate(task.requirement_nature, origin)
    if verdict.decision == LegitimacyDecision.EXCLUDE:
        out.append(Violation(
            "LEGITIMACY_EXCLUDED",
            f"({task.requirement_nature.value}, {task.intent_origin.value}) tasks are excluded"))
    elif verdict.decision == LegitimacyDecision.CONVERT and not task.converted_from_posterior:
        out.append(Violation(
            "UNCONVERTED_POSTERIOR",
            "posterior task must be converted to a determinate pseudo-prior objective"))

    return out


# ---------------------------------------------------------------------------
# JSON (de)serialization -- one UTF-8 document per task


def requirement_to_dict(r: AtomicRequirement) -> dict:
    d: dict = {
        "id": r.id,
        "category": r.category.value,
        "slot": r.slot,
        "value": r.value,
        "non_default": r.non_default,
    }
    if r.default_value is not None:
        d["default_value"] = r.default_value
    if r.aliases:
        d["aliases"] = list(r.aliases)
    return d


def requirement_from_dict(d: dict) -> AtomicRequirement:
    return AtomicRequirement(
        id=d["id"],
        category=RequirementCategory(d["category"]),
        slot=d["slot"],
        value=d["value"],
        non_default=bool(d.get("non_default", False)),
        default_value=d.get("default_value"),
        aliases=tuple(d.get("aliases", ())),
    )


def task_to_dict(task: Task) -> dict:
    return {
        "task_id": task.task_id,
        "app": task.app,
        "domain": task.domain.value,
        "requirement_nature": task.requirement_nature.value,
        "intent_origin": task.intent_origin.value,
        "converted_from_posterior": task.converted_from_posterior,
        "mock_app": task.mock_app,
        "intent": [requirement_to_dict(r) for r in task.intent.requirements],
        "instructions": {
            clarity.value: {
                "text": instr.text,
                "covered_ids": sorted(instr.covered_ids),
                "includes_path": instr.includes_path,
            }
            for clarity, instr in sorted(task.instructions.items(), key=lambda kv: kv[0].value)
        },
        "reference": [
            {"index": s.index, "description": s.description, "page": s.page}
            for s in task.reference.key_steps
        ],
        "injection": [
            {"kind": c.kind, "payload": c.payload} for c in task.injection_spec.commands
        ],
    }


def task_from_dict(d: dict) -> Task:
    instructions = {}
    for name, idoc in d.get("instructions", {}).items():
        clarity = Clarity(name)
        instructions[clarity] = ObservedInstruction(
            text=idoc["text"],
            clarity=clarity,
            covered_ids=frozenset(idoc.get("covered_ids", ())),
            includes_path=bool(idoc.get("includes_path", False)),
        )
    return Task(
        task_id=d["task_id"],
        app=d["app"],
        domain=Domain(d["domain"]),
        intent=GroundTruthIntent(tuple(requirement_from_dict(r) for r in d["intent"])),
        instructions=instructions,
        reference=ReferenceTrajectory(tuple(
            KeyStep(s["index"], s["description"], s["page"]) for s in d.get("reference", ())
        )),
        injection_spec=StateInjectionSpec(tuple(
            InjectionCommand(c["kind"], c.get("payload", {})) for c in d.get("injection", ())
        )),
        requirement_nature=RequirementNature(d.get("requirement_nature", "Functional")),
        intent_origin=IntentOrigin(d.get("intent_origin", "Prior")),
        converted_from_posterior=bool(d.get("converted_from_posterior", False)),
        mock_app=d.get("mock_app"),
    )


def load_task(path: str | Path) -> Task:
    with open(path, encoding="utf-8") as fh:
        return task_from_dict(json.load(fh))


def save_task(task: Task, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(task_to_dict(task), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


@dataclass
class Suite:
    """A task suite: manifest plus the task documents it lists."""

    root: Path
    tasks: list[Task]
    manifest: dict

    def task(self, task_id: str) -> Task:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)


def load_suite(root: str | Path) -> Suite:
    root = Path(root)
    with open(root / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    tasks = [load_task(root / "tasks" / f"{tid}.json") for tid in manifest["tasks"]]
    return Suite(root=root, tasks=tasks, manifest=manifest)


def suite_manifest_entry(task: Task) -> dict:
    """Per-task tags recorded in the suite manifest."""
    return {
        "domain": task.domain.value,
        "difficulty": difficulty_tier(task.intent).value,
        "interactive": bool(task.intent.parameter_ids()),
    }


def validate_suite(suite: Suite) -> dict[str, list[Violation]]:
    """Validate every task plus manifest/tag consistency; empty dict is clean."""
    report: dict[str, list[Violation]] = {}
    for task in suite.tasks:
        violations = validate_task(task)
        tags = suite.manifest.get("tags", {}).get(task.task_id)
        if tags is not None and tags != suite_manifest_entry(task):
            violations.append(Violation(
                "MANIFEST_TAGS", f"manifest tags for '{task.task_id}' disagree with the task"))
        if violations:
            report[task.task_id] = violations
    return report
