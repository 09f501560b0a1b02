"""Task model: gap computation, clarity classification, validation."""

import itertools
import random

from intentgap.taskmodel import (
    AtomicRequirement,
    Clarity,
    Difficulty,
    GroundTruthIntent,
    ObservedInstruction,
    RequirementCategory,
    ValidationError,
    Violation,
    classify_clarity,
    cognitive_gap,
    difficulty_tier,
    load_task,
    save_task,
    task_from_dict,
    task_to_dict,
    validate_intent,
    validate_task,
)

from conftest import burger_intent, burger_task, full_instruction


def _instr(covered, includes_path=False, clarity=Clarity.STANDARD):
    return ObservedInstruction(
        text="x", clarity=clarity, covered_ids=frozenset(covered),
        includes_path=includes_path)


def test_gap_on_fully_specified_instruction_is_empty(intent):
    gap = cognitive_gap(intent, full_instruction(Clarity.STANDARD))
    assert gap.missing_ids == frozenset()
    assert len(gap) == 0


def test_gap_grows_as_coverage_shrinks(intent):
    gap = cognitive_gap(intent, _instr({"item"}))
    assert gap.missing_ids == {"beverage", "ice"}
    gap = cognitive_gap(intent, _instr(set()))
    assert gap.missing_ids == {"item", "beverage", "ice"}


def test_gap_rejects_unknown_covered_ids(intent):
    try:
        cognitive_gap(intent, _instr({"item", "fries"}))
        assert False, "expected ValidationError"
    except ValidationError as exc:
        assert "fries" in str(exc)


def test_gap_matches_set_difference_on_random_intents():
    """Property check against the plain set-difference definition."""
    rng = random.Random(20240817)
    for _ in range(300):
        n = rng.randint(1, 8)
        reqs = tuple(
            AtomicRequirement(
                id=f"r{i}",
                category=rng.choice(list(RequirementCategory)),
                slot=f"s{i}", value=f"v{i}")
            for i in range(n))
        intent = GroundTruthIntent(reqs)
        covered = {r.id for r in reqs if rng.random() < 0.5}
        gap = cognitive_gap(intent, _instr(covered))
        assert gap.missing_ids == {r.id for r in reqs} - covered


def test_classify_clarity_exhaustive_truth_table(intent):
    """Enumerate every coverage subset x path flag and check the level

    against the rule set written out independently: missing anchor is
    Ambiguous, missing parameter is Incomplete, full coverage splits on the
    path flag.
    """
    ids = sorted(intent.ids())
    anchors = intent.anchor_ids()
    for k in range(len(ids) + 1):
        for subset in itertools.combinations(ids, k):
            covered = set(subset)
            for includes_path in (False, True):
                got = classify_clarity(_instr(covered, includes_path), intent)
                if anchors - covered:
                    want = Clarity.AMBIGUOUS
                elif set(ids) - covered:
                    want = Clarity.INCOMPLETE
                elif includes_path:
                    want = Clarity.DETAILED
                else:
                    want = Clarity.STANDARD
                assert got == want, (covered, includes_path)


def test_classify_clarity_ignores_ids_outside_intent(intent):
    got = classify_clarity(_instr({"item", "beverage", "ice", "extra"}), intent)
    assert got == Clarity.STANDARD


def test_difficulty_tier_boundaries():
    def intent_of_size(n):
        return GroundTruthIntent(tuple(
            AtomicRequirement(
                id=f"r{i}", category=RequirementCategory.ANCHOR,
                slot=f"s{i}", value=f"v{i}")
            for i in range(n)))

    assert difficulty_tier(intent_of_size(1)) == Difficulty.SIMPLE
    assert difficulty_tier(intent_of_size(2)) == Difficulty.SIMPLE
    assert difficulty_tier(intent_of_size(3)) == Difficulty.MEDIUM
    assert difficulty_tier(intent_of_size(4)) == Difficulty.MEDIUM
    assert difficulty_tier(intent_of_size(5)) == Difficulty.HARD
    assert difficulty_tier(intent_of_size(9)) == Difficulty.HARD


def _codes(violations: list[Violation]) -> set[str]:
    return {v.code for v in violations}


def test_validate_intent_flags_default_valued_parameters():
    intent = GroundTruthIntent((
        AtomicRequirement(
            id="a", category=RequirementCategory.ANCHOR, slot="item", value="X"),
        AtomicRequirement(
            id="p", category=RequirementCategory.EXPLICIT, slot="size", value="medium",
            non_default=True, default_value="medium"),
    ))
    assert "DEFAULT_VALUE_USED" in _codes(validate_intent(intent))


def test_validate_intent_requires_default_value_when_non_default():
    intent = GroundTruthIntent((
        AtomicRequirement(
            id="a", category=RequirementCategory.ANCHOR, slot="item", value="X"),
        AtomicRequirement(
            id="p", category=RequirementCategory.EXPLICIT, slot="size", value="large",
            non_default=True),
    ))
    assert "DEFAULT_VALUE_MISSING" in _codes(validate_intent(intent))


def test_validate_intent_requires_an_anchor():
    intent = GroundTruthIntent((
        AtomicRequirement(
            id="p", category=RequirementCategory.EXPLICIT, slot="size", value="large",
            non_default=True, default_value="medium"),
    ))
    assert "ANCHOR_MISSING" in _codes(validate_intent(intent))


def test_validate_intent_rejects_duplicate_ids_and_empty_values():
    intent = GroundTruthIntent((
        AtomicRequirement(
            id="a", category=RequirementCategory.ANCHOR, slot="item", value="X"),
        AtomicRequirement(
            id="a", category=RequirementCategory.ANCHOR, slot="item", value=""),
    ))
    codes = _codes(validate_intent(intent))
    assert {"DUPLICATE_ID", "EMPTY_VALUE"} <= codes


def test_validate_task_accepts_the_reference_task(task):
    assert validate_task(task) == []


def test_validate_task_unmarked_parameter_defaults(task):
    loose = GroundTruthIntent((
        task.intent.requirements[0],
        AtomicRequirement(
            id="beverage", category=RequirementCategory.EXPLICIT,
            slot="beverage", value="Medium Coke Zero"),
        task.intent.requirements[2],
    ))
    bad = task_from_dict({**task_to_dict(task), "intent": [
        {"id": r.id, "category": r.category.value, "slot": r.slot, "value": r.value,
         "non_default": r.non_default,
         **({"default_value": r.default_value} if r.default_value else {})}
        for r in loose.requirements]})
    assert "DEFAULT_VALUE_USED" in _codes(validate_task(bad))


def test_validate_task_detects_clarity_mismatch(task):
    doc = task_to_dict(task)
    doc["instructions"]["Incomplete"]["covered_ids"] = ["item", "beverage", "ice"]
    assert "CLARITY_MISMATCH" in _codes(validate_task(task_from_dict(doc)))


def test_validate_task_detects_missing_level(task):
    doc = task_to_dict(task)
    del doc["instructions"]["Standard"]
    assert "LEVEL_MISSING" in _codes(validate_task(task_from_dict(doc)))


def test_validate_task_path_flag_rules(task):
    doc = task_to_dict(task)
    doc["instructions"]["Detailed"]["includes_path"] = False
    codes = _codes(validate_task(task_from_dict(doc)))
    # Dropping the flag demotes the classification and breaks the flag rule.
    assert "CLARITY_MISMATCH" in codes or "PATH_FLAG" in codes


def test_validate_task_bypass_rule():
    doc = task_to_dict(burger_task())
    doc["intent"] = [doc["intent"][0]]  # anchor only: nothing maskable
    doc["instructions"]["Incomplete"]["covered_ids"] = []
    doc["instructions"]["Incomplete"]["text"] = "Order."
    codes = _codes(validate_task(task_from_dict(doc)))
    assert "BYPASS_VIOLATED" in codes


def test_validate_task_legitimacy_gate():
    doc = task_to_dict(burger_task())
    doc["requirement_nature"] = "ValueLaden"
    doc["intent_origin"] = "Posterior"
    assert "LEGITIMACY_EXCLUDED" in _codes(validate_task(task_from_dict(doc)))

    doc["requirement_nature"] = "Functional"
    assert "UNCONVERTED_POSTERIOR" in _codes(validate_task(task_from_dict(doc)))

    doc["converted_from_posterior"] = True
    codes = _codes(validate_task(task_from_dict(doc)))
    assert "UNCONVERTED_POSTERIOR" not in codes and "LEGITIMACY_EXCLUDED" not in codes


def test_validate_task_reference_ordering(task):
    doc = task_to_dict(task)
    doc["reference"] = [
        {"index": 2, "description": "b", "page": "P"},
        {"index": 1, "description": "a", "page": "P"},
    ]
    assert "REFERENCE_ORDER" in _codes(validate_task(task_from_dict(doc)))
    doc["reference"] = []
    assert "REFERENCE_EMPTY" in _codes(validate_task(task_from_dict(doc)))


def test_task_json_round_trip(tmp_path, task):
    path = tmp_path / "task.json"
    save_task(task, path)
    again = load_task(path)
    assert again == task
    save_task(again, tmp_path / "task2.json")
    assert (tmp_path / "task.json").read_bytes() == (tmp_path / "task2.json").read_bytes()
