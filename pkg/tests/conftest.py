"""Shared builders for tests: a small burger-ordering intent and task."""

from pathlib import Path

import pytest

from intentgap.taskmodel import (
    AtomicRequirement,
    Clarity,
    Domain,
    GroundTruthIntent,
    KeyStep,
    ObservedInstruction,
    ReferenceTrajectory,
    RequirementCategory,
    Task,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def burger_intent() -> GroundTruthIntent:
    return GroundTruthIntent((
        AtomicRequirement(
            id="item", category=RequirementCategory.ANCHOR,
            slot="item", value="Filet-O-Fish Meal"),
        AtomicRequirement(
            id="beverage", category=RequirementCategory.EXPLICIT,
            slot="beverage", value="Medium Coke Zero",
            non_default=True, default_value="Medium Coke",
            aliases=("drink", "soda")),
        AtomicRequirement(
            id="ice", category=RequirementCategory.IMPLICIT,
            slot="ice", value="No Ice",
            non_default=True, default_value="Regular Ice"),
    ))


def burger_reference() -> ReferenceTrajectory:
    return ReferenceTrajectory((
        KeyStep(0, "open the burger app", "Home"),
        KeyStep(1, "tap [Filet-O-Fish Meal]", "Menu"),
        KeyStep(2, "select [Coke Zero] and [Medium]", "Customize Drink"),
        KeyStep(3, "toggle [No Ice]", "Customize Drink"),
        KeyStep(4, "tap [Pay]", "Cart"),
    ))


def full_instruction(clarity: Clarity, includes_path: bool = False) -> ObservedInstruction:
    return ObservedInstruction(
        text="Order a Filet-O-Fish Meal with a Medium Coke Zero, no ice."
        + (" Open the app, tap the meal, customize the drink, pay." if includes_path else ""),
        clarity=clarity,
        covered_ids=frozenset({"item", "beverage", "ice"}),
        includes_path=includes_path,
    )


def burger_task() -> Task:
    instructions = {
        Clarity.DETAILED: full_instruction(Clarity.DETAILED, includes_path=True),
        Clarity.STANDARD: full_instruction(Clarity.STANDARD),
        Clarity.INCOMPLETE: ObservedInstruction(
            text="Order a Filet-O-Fish Meal.",
            clarity=Clarity.INCOMPLETE,
            covered_ids=frozenset({"item"})),
        Clarity.AMBIGUOUS: ObservedInstruction(
            text="Get me something to eat.",
            clarity=Clarity.AMBIGUOUS,
            covered_ids=frozenset()),
    }
    return Task(
        task_id="burger_meal",
        app="BurgerApp",
        domain=Domain.ECOMMERCE,
        intent=burger_intent(),
        instructions=instructions,
        reference=burger_reference(),
    )


@pytest.fixture
def intent() -> GroundTruthIntent:
    return burger_intent()


@pytest.fixture
def task() -> Task:
    return burger_task()
