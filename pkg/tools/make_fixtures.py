#!/usr/bin/env python3
"""Generate the bundled fixture data: task suite, mock apps, hypernym table,
inquiry corpus with a scripted oracle, rater annotations, and the canonical
run configuration.

Everything is derived programmatically and deterministically, so running
this script twice produces byte-identical files. Run from the repository
root after an editable install:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from intentgap.derivation import HypernymTable, derive_all
from intentgap.oracle import OraclePurpose, OracleRequest
from intentgap.sandbox.mockdevice import MockApp, validate_app
from intentgap.taskmodel import (
    AtomicRequirement,
    Domain,
    GroundTruthIntent,
    InjectionCommand,
    IntentOrigin,
    KeyStep,
    ReferenceTrajectory,
    RequirementCategory,
    RequirementNature,
    StateInjectionSpec,
    Task,
    save_task,
    suite_manifest_entry,
    validate_suite,
)
from intentgap.taskmodel import load_suite

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

ANCHOR = RequirementCategory.ANCHOR
EXPLICIT = RequirementCategory.EXPLICIT
IMPLICIT = RequirementCategory.IMPLICIT


# ---------------------------------------------------------------------------
# Layout helpers: rows of 150x40 elements starting at (20, 40), 50 px apart.


def el(label: str, row: int) -> dict:
    return {"label": label, "region": [20, 40 + 50 * row, 150, 40]}


def pt(row: int) -> tuple[int, int]:
    return (25, 45 + 50 * row)


def tap(row: int) -> list:
    x, y = pt(row)
    return ["tap", x, y]


def rule(screen: str, element: str, to: str, operation: str, feedback: str,
         flags: dict | None = None) -> dict:
    return {
        "screen": screen, "on": {"kind": "tap", "element": element},
        "to": to, "operation": operation, "feedback": feedback,
        "set_flags": flags or {},
    }


def text_rule(screen: str, operation: str, feedback: str, flag: str) -> dict:
    return {
        "screen": screen, "on": {"kind": "text"}, "to": screen,
        "operation": operation, "feedback": feedback,
        "set_flags": {flag: "$text"},
    }


def req(rid: str, category: RequirementCategory, slot: str, value: str,
        default: str | None = None, aliases: tuple = ()) -> AtomicRequirement:
    return AtomicRequirement(
        id=rid, category=category, slot=slot, value=value,
        non_default=default is not None, default_value=default,
        aliases=aliases)


# ---------------------------------------------------------------------------
# Mock apps


def burgerhub_app() -> dict:
    return {
        "app_id": "burgerhub",
        "initial_screen": "menu",
        "screens": [
            {"id": "menu", "page": "Menu", "elements": [
                el("Filet-O-Fish Meal", 0), el("Big Mac Meal", 1)]},
            {"id": "meal", "page": "Meal Customization", "elements": [
                el("Drinks", 0), el("No Ice", 1), el("Regular Ice", 2),
                el("Add to Cart", 3)]},
            {"id": "drinks", "page": "Drink Selection", "elements": [
                el("Medium Coke", 0), el("Medium Coke Zero", 1),
                el("Medium Sprite", 2), el("Back", 3)]},
            {"id": "cart", "page": "Cart", "elements": [el("Pay", 0)]},
            {"id": "done", "page": "Order Confirmed", "elements": [
                el("Receipt", 0)]},
        ],
        "transitions": [
            rule("menu", "Filet-O-Fish Meal", "meal", "Tap [Filet-O-Fish Meal]",
                 "Meal opened", {"item": "filet"}),
            rule("menu", "Big Mac Meal", "meal", "Tap [Big Mac Meal]",
                 "Meal opened", {"item": "bigmac"}),
            rule("meal", "Drinks", "drinks", "Tap [Drinks]", "Drink list shown"),
            rule("drinks", "Medium Coke", "meal", "Select [Medium Coke]",
                 "Drink set", {"drink": "coke_medium"}),
            rule("drinks", "Medium Coke Zero", "meal", "Select [Medium Coke Zero]",
                 "Drink set", {"drink": "cokezero_medium"}),
            rule("drinks", "Medium Sprite", "meal", "Select [Medium Sprite]",
                 "Drink set", {"drink": "sprite_medium"}),
            rule("drinks", "Back", "meal", "Tap [Back]", "Back to meal"),
            rule("meal", "No Ice", "meal", "Select [No Ice]",
                 "Ice removed", {"ice": "none"}),
            rule("meal", "Regular Ice", "meal", "Select [Regular Ice]",
                 "Ice kept regular", {"ice": "regular"}),
            rule("meal", "Add to Cart", "cart", "Tap [Add to Cart]",
                 "Added to cart"),
            rule("cart", "Pay", "done", "Tap [Pay]", "Payment complete",
                 {"paid": True}),
        ],
        "goals": {
            "item": {"item": "filet", "paid": True},
            "beverage": {"drink": "cokezero_medium", "paid": True},
            "ice": {"ice": "none", "paid": True},
        },
        "defaults": {"drink": "coke_medium", "ice": "regular", "paid": False},
        "public": {
            "app": "BurgerHub",
            "plan": [
                {"slot": "item", "choices": {
                    "Filet-O-Fish Meal": [tap(0)], "Big Mac Meal": [tap(1)]}},
                {"slot": "beverage", "default": "Medium Coke", "choices": {
                    "Medium Coke": [tap(0), tap(0)],
                    "Medium Coke Zero": [tap(0), tap(1)],
                    "Medium Sprite": [tap(0), tap(2)]}},
                {"slot": "ice", "default": "Regular Ice", "choices": {
                    "No Ice": [tap(1)], "Regular Ice": [tap(2)]}},
                {"always": [tap(3), tap(0)]},
            ],
        },
    }


def beanbar_app() -> dict:
    return {
        "app_id": "beanbar",
        "initial_screen": "menu",
        "screens": [
            {"id": "menu", "page": "Coffee Menu", "elements": [
                el("Latte", 0), el("Espresso", 1)]},
            {"id": "custom", "page": "Customize Drink", "elements": [
                el("Small", 0), el("Medium", 1), el("Large", 2),
                el("Checkout", 3)]},
            {"id": "done", "page": "Order Placed", "elements": [
                el("New Order", 0)]},
        ],
        "transitions": [
            rule("menu", "Latte", "custom", "Tap [Latte]", "Drink opened",
                 {"item": "latte"}),
            rule("menu", "Espresso", "custom", "Tap [Espresso]", "Drink opened",
                 {"item": "espresso"}),
            rule("custom", "Small", "custom", "Select [Small]", "Size set",
                 {"size": "small"}),
            rule("custom", "Medium", "custom", "Select [Medium]", "Size set",
                 {"size": "medium"}),
            rule("custom", "Large", "custom", "Select [Large]", "Size set",
                 {"size": "large"}),
            rule("custom", "Checkout", "done", "Tap [Checkout]",
                 "Order placed", {"paid": True}),
            rule("done", "New Order", "menu", "Tap [New Order]",
                 "New order started"),
        ],
        "goals": {
            "item": {"item": "latte", "paid": True},
            "size": {"size": "large", "paid": True},
        },
        "defaults": {"size": "medium", "paid": False},
        "public": {
            "app": "BeanBar",
            "plan": [
                {"slot": "item", "choices": {
                    "Latte": [tap(0)], "Espresso": [tap(1)]}},
                {"slot": "size", "default": "Medium", "choices": {
                    "Small": [tap(0)], "Medium": [tap(1)], "Large": [tap(2)]}},
                {"always": [tap(3)]},
            ],
        },
    }


def chatly_app() -> dict:
    return {
        "app_id": "chatly",
        "initial_screen": "chats",
        "screens": [
            {"id": "chats", "page": "Chats", "elements": [
                el("Mom", 0), el("Alex", 1)]},
            {"id": "thread", "page": "Conversation", "elements": [
                el("Beach Photo", 0), el("Message Box", 1), el("Send", 2)]},
            {"id": "sent", "page": "Message Sent", "elements": [el("Home", 0)]},
        ],
        "transitions": [
            rule("chats", "Mom", "thread", "Tap [Mom]", "Chat opened",
                 {"recipient": "mom"}),
            rule("chats", "Alex", "thread", "Tap [Alex]", "Chat opened",
                 {"recipient": "alex"}),
            rule("thread", "Beach Photo", "thread", "Select [Beach Photo]",
                 "Photo attached", {"attach": "beach"}),
            text_rule("thread", "Type the caption", "Caption added", "caption"),
            rule("thread", "Send", "sent", "Tap [Send]", "Message sent",
                 {"sent": True}),
        ],
        "goals": {
            "recipient": {"recipient": "mom", "sent": True},
            "caption": {"caption": "Miss you", "sent": True},
        },
        "defaults": {"caption": "", "sent": False},
        "public": {
            "app": "Chatly",
            "plan": [
                {"slot": "recipient", "choices": {
                    "Mom": [tap(0)], "Alex": [tap(1)]}},
                {"always": [tap(0)]},
                {"slot": "caption", "input": True},
                {"always": [tap(2)]},
            ],
        },
    }


def clockwork_app() -> dict:
    return {
        "app_id": "clockwork",
        "initial_screen": "alarms",
        "screens": [
            {"id": "alarms", "page": "Alarms", "elements": [el("New Alarm", 0)]},
            {"id": "edit", "page": "Alarm Editor", "elements": [
                el("Time: 6:30 AM", 0), el("Time: 7:00 AM", 1), el("Repeat", 2),
                el("Sound", 3), el("Snooze Off", 4), el("Snooze On", 5),
                el("Label Box", 6), el("Save", 7)]},
            {"id": "repeat", "page": "Repeat Options", "elements": [
                el("Never", 0), el("Weekdays", 1), el("Every Day", 2)]},
            {"id": "sound", "page": "Sound Options", "elements": [
                el("Radar", 0), el("Chimes", 1), el("Beacon", 2)]},
        ],
        "transitions": [
            rule("alarms", "New Alarm", "edit", "Tap [New Alarm]",
                 "Editor opened"),
            rule("edit", "Time: 6:30 AM", "edit", "Select [6:30 AM]",
                 "Time set", {"time": "6:30 AM"}),
            rule("edit", "Time: 7:00 AM", "edit", "Select [7:00 AM]",
                 "Time set", {"time": "7:00 AM"}),
            rule("edit", "Repeat", "repeat", "Tap [Repeat]", "Repeat options"),
            rule("repeat", "Never", "edit", "Select [Never]", "Repeat set",
                 {"repeat": "never"}),
            rule("repeat", "Weekdays", "edit", "Select [Weekdays]",
                 "Repeat set", {"repeat": "weekdays"}),
            rule("repeat", "Every Day", "edit", "Select [Every Day]",
                 "Repeat set", {"repeat": "every_day"}),
            rule("edit", "Sound", "sound", "Tap [Sound]", "Sound options"),
            rule("sound", "Radar", "edit", "Select [Radar]", "Sound set",
                 {"sound": "radar"}),
            rule("sound", "Chimes", "edit", "Select [Chimes]", "Sound set",
                 {"sound": "chimes"}),
            rule("sound", "Beacon", "edit", "Select [Beacon]", "Sound set",
                 {"sound": "beacon"}),
            rule("edit", "Snooze Off", "edit", "Select [Snooze Off]",
                 "Snooze disabled", {"snooze": "off"}),
            rule("edit", "Snooze On", "edit", "Select [Snooze On]",
                 "Snooze enabled", {"snooze": "on"}),
            text_rule("edit", "Type the label", "Label set", "label"),
            rule("edit", "Save", "alarms", "Tap [Save]", "Alarm saved",
                 {"saved": True}),
        ],
        "goals": {
            "time": {"time": "6:30 AM", "saved": True},
            "repeat": {"repeat": "weekdays", "saved": True},
            "sound": {"sound": "chimes", "saved": True},
            "snooze": {"snooze": "off", "saved": True},
            "label": {"label": "Gym", "saved": True},
        },
        "defaults": {"repeat": "never", "sound": "radar", "snooze": "on",
                     "label": "Alarm", "saved": False},
        "public": {
            "app": "ClockWork",
            "plan": [
                {"always": [tap(0)]},
                {"slot": "time", "default": "7:00 AM Alarm", "choices": {
                    "6:30 AM Alarm": [tap(0)], "7:00 AM Alarm": [tap(1)]}},
                {"slot": "repeat", "default": "Never", "choices": {
                    "Never": [tap(2), tap(0)],
                    "Weekdays": [tap(2), tap(1)],
                    "Every Day": [tap(2), tap(2)]}},
                {"slot": "sound", "default": "Radar", "choices": {
                    "Radar": [tap(3), tap(0)],
                    "Chimes": [tap(3), tap(1)],
                    "Beacon": [tap(3), tap(2)]}},
                {"slot": "snooze", "default": "Snooze On", "choices": {
                    "Snooze Off": [tap(4)], "Snooze On": [tap(5)]}},
                {"slot": "label", "input": True},
                {"always": [tap(7)]},
            ],
        },
    }


def powerctl_app() -> dict:
    return {
        "app_id": "powerctl",
        "initial_screen": "settings",
        "screens": [
            {"id": "settings", "page": "Settings", "elements": [el("Battery", 0)]},
            {"id": "battery", "page": "Battery Settings", "elements": [
                el("Battery Saver", 0), el("Threshold: 10%", 1),
                el("Threshold: 20%", 2), el("Apply", 3)]},
        ],
        "transitions": [
            rule("settings", "Battery", "battery", "Tap [Battery]",
                 "Battery settings"),
            rule("battery", "Battery Saver", "battery", "Toggle [Battery Saver]",
                 "Battery saver on", {"saver": True}),
            rule("battery", "Threshold: 10%", "battery", "Select [10%]",
                 "Threshold set", {"threshold": "10%"}),
            rule("battery", "Threshold: 20%", "battery", "Select [20%]",
                 "Threshold set", {"threshold": "20%"}),
            rule("battery", "Apply", "battery", "Tap [Apply]",
                 "Settings applied", {"applied": True}),
        ],
        "goals": {
            "mode": {"saver": True, "applied": True},
            "threshold": {"threshold": "20%", "applied": True},
        },
        "defaults": {"saver": False, "threshold": "10%", "applied": False},
        "public": {
            "app": "PowerCtl",
            "plan": [
                {"always": [tap(0)]},
                {"slot": "mode", "default": "Battery Saver", "choices": {
                    "Battery Saver": [tap(0)]}},
                {"slot": "threshold", "default": "10%", "choices": {
                    "10%": [tap(1)], "20%": [tap(2)]}},
                {"always": [tap(3)]},
            ],
        },
    }


def notely_app() -> dict:
    return {
        "app_id": "notely",
        "initial_screen": "notes",
        "screens": [
            {"id": "notes", "page": "Notes", "elements": [el("New Note", 0)]},
            {"id": "editor", "page": "Note Editor", "elements": [
                el("Title Box", 0), el("Folder", 1), el("Pin Note", 2),
                el("Done", 3)]},
            {"id": "folders", "page": "Folder Picker", "elements": [
                el("Unfiled", 0), el("Personal", 1), el("Work", 2)]},
        ],
        "transitions": [
            rule("notes", "New Note", "editor", "Tap [New Note]",
                 "Editor opened"),
            text_rule("editor", "Type the title", "Title saved", "title"),
            rule("editor", "Folder", "folders", "Tap [Folder]", "Folder picker"),
            rule("folders", "Unfiled", "editor", "Select [Unfiled]",
                 "Folder set", {"folder": "unfiled"}),
            rule("folders", "Personal", "editor", "Select [Personal]",
                 "Folder set", {"folder": "personal"}),
            rule("folders", "Work", "editor", "Select [Work]", "Folder set",
                 {"folder": "work"}),
            rule("editor", "Pin Note", "editor", "Toggle [Pin Note]",
                 "Note pinned", {"pin": "pinned"}),
            rule("editor", "Done", "notes", "Tap [Done]", "Note saved",
                 {"saved": True}),
        ],
        "goals": {
            "title": {"title": "Groceries", "saved": True},
            "folder": {"folder": "personal", "saved": True},
            "pin": {"pin": "pinned", "saved": True},
        },
        "defaults": {"folder": "unfiled", "pin": "unpinned", "title": "",
                     "saved": False},
        "public": {
            "app": "Notely",
            "plan": [
                {"always": [tap(0)]},
                {"slot": "title", "input": True, "subject": True},
                {"slot": "folder", "default": "Unfiled", "choices": {
                    "Unfiled": [tap(1), tap(0)],
                    "Personal": [tap(1), tap(1)],
                    "Work": [tap(1), tap(2)]}},
                {"slot": "pin", "default": "Not Pinned", "choices": {
                    "Pinned": [tap(2)], "Not Pinned": []}},
                {"always": [tap(3)]},
            ],
        },
    }


# ---------------------------------------------------------------------------
# Tasks


HYPERNYMS = {
    "Filet-O-Fish Meal": "a hamburger meal",
    "Latte": "a hot drink",
    "Mom": "a family member",
    "6:30 AM Alarm": "an early morning alarm",
    "Battery Saver": "a power-saving mode",
    "Groceries": "a shopping list",
}


def ref(steps: list[tuple[str, str]]) -> ReferenceTrajectory:
    return ReferenceTrajectory(tuple(
        KeyStep(i, desc, page) for i, (desc, page) in enumerate(steps)))


def build_tasks() -> list[Task]:
    hypernyms = HypernymTable(HYPERNYMS)
    specs = [
        dict(
            task_id="mcd_filet_meal", app="BurgerHub", domain=Domain.ECOMMERCE,
            mock_app="apps/burgerhub.json",
            intent=GroundTruthIntent((
                req("item", ANCHOR, "item", "Filet-O-Fish Meal"),
                req("beverage", EXPLICIT, "beverage", "Medium Coke Zero",
                    default="Medium Coke", aliases=("drink", "soda")),
                req("ice", IMPLICIT, "ice", "No Ice", default="Regular Ice"),
            )),
            reference=ref([
                ("tap [Filet-O-Fish Meal]", "Menu"),
                ("tap [Drinks]", "Meal Customization"),
                ("select [Medium Coke Zero]", "Drink Selection"),
                ("select [No Ice]", "Meal Customization"),
                ("tap [Add to Cart]", "Meal Customization"),
                ("tap [Pay]", "Cart"),
            ]),
        ),
        dict(
            task_id="coffee_latte", app="BeanBar", domain=Domain.ECOMMERCE,
            mock_app="apps/beanbar.json",
            intent=GroundTruthIntent((
                req("item", ANCHOR, "item", "Latte"),
                req("size", EXPLICIT, "size", "Large", default="Medium",
                    aliases=("cup size",)),
            )),
            reference=ref([
                ("tap [Latte]", "Coffee Menu"),
                ("select [Large]", "Customize Drink"),
                ("tap [Checkout]", "Customize Drink"),
            ]),
        ),
        dict(
            task_id="msg_forward", app="Chatly", domain=Domain.SOCIAL,
            mock_app="apps/chatly.json",
            requirement_nature=RequirementNature.VALUE_LADEN,
            intent=GroundTruthIntent((
                req("recipient", ANCHOR, "recipient", "Mom"),
                req("caption", EXPLICIT, "caption", "Miss you",
                    default="(no caption)"),
            )),
            reference=ref([
                ("tap [Mom]", "Chats"),
                ("select [Beach Photo]", "Conversation"),
                ("type the caption", "Conversation"),
                ("tap [Send]", "Conversation"),
            ]),
        ),
        dict(
            task_id="alarm_setup", app="ClockWork", domain=Domain.DEVICE_SYSTEM,
            mock_app="apps/clockwork.json",
            injection_spec=StateInjectionSpec((InjectionCommand(
                "SettingPut", {"key": "device_volume", "value": "high"}),)),
            intent=GroundTruthIntent((
                req("time", ANCHOR, "time", "6:30 AM Alarm"),
                req("repeat", EXPLICIT, "repeat", "Weekdays", default="Never"),
                req("sound", EXPLICIT, "sound", "Chimes", default="Radar",
                    aliases=("ringtone",)),
                req("snooze", IMPLICIT, "snooze", "Snooze Off",
                    default="Snooze On"),
                req("label", EXPLICIT, "label", "Gym", default="Alarm"),
            )),
            reference=ref([
                ("tap [New Alarm]", "Alarms"),
                ("select [6:30 AM]", "Alarm Editor"),
                ("tap [Repeat]", "Alarm Editor"),
                ("select [Weekdays]", "Repeat Options"),
                ("tap [Sound]", "Alarm Editor"),
                ("select [Chimes]", "Sound Options"),
                ("select [Snooze Off]", "Alarm Editor"),
                ("type the label", "Alarm Editor"),
                ("tap [Save]", "Alarm Editor"),
            ]),
        ),
        dict(
            task_id="battery_saver", app="PowerCtl", domain=Domain.DEVICE_SYSTEM,
            mock_app="apps/powerctl.json",
            intent=GroundTruthIntent((
                req("mode", ANCHOR, "mode", "Battery Saver"),
                req("threshold", EXPLICIT, "threshold", "20%", default="10%"),
            )),
            reference=ref([
                ("tap [Battery]", "Settings"),
                ("toggle [Battery Saver]", "Battery Settings"),
                ("select [20%]", "Battery Settings"),
                ("tap [Apply]", "Battery Settings"),
            ]),
        ),
        dict(
            task_id="note_create", app="Notely", domain=Domain.PRODUCTIVITY,
            mock_app="apps/notely.json",
            intent=GroundTruthIntent((
                req("title", ANCHOR, "title", "Groceries"),
                req("folder", EXPLICIT, "folder", "Personal", default="Unfiled"),
                req("pin", IMPLICIT, "pin", "Pinned", default="Not Pinned"),
            )),
            reference=ref([
                ("tap [New Note]", "Notes"),
                ("type the title", "Note Editor"),
                ("tap [Folder]", "Note Editor"),
                ("select [Personal]", "Folder Picker"),
                ("toggle [Pin Note]", "Note Editor"),
                ("tap [Done]", "Note Editor"),
            ]),
        ),
    ]
    tasks = []
    for spec in specs:
        bare = Task(instructions={}, **spec)
        task = Task(instructions=derive_all(bare, hypernyms), **spec)
        tasks.append(task)
    return tasks


GOLDEN_QUIRKS = {
    "mcd_filet_meal": {"skip_ask": ["ice"]},
    "coffee_latte": {
        "preface_questions": ["What would you like?"],
        "trailing_actions": [tap(0)],
    },
    "msg_forward": {
        "preface_questions": [
            "Which recipient do you want?",
            "Should I click the send button?",
        ],
    },
    "battery_saver": {"preface_questions": ["Do you want a receipt?"]},
    "note_create": {
        "trailing_actions": [["tap", 300, 500]] * 3,
    },
}


# ---------------------------------------------------------------------------
# Inquiry corpus (questions aimed at the burger task's simulator)

PS = "ParameterSeeking"
OTHER = "Other"

# (question, classification or None for the UI-keyword pre-filter,
#  slots matched, open_ended flag)
CORPUS: list[tuple[str, str | None, list[str], bool]] = [
    ("Which beverage would you like?", PS, ["beverage"], True),
    ("What drink should I pick?", PS, ["beverage"], False),
    ("Do you want ice in the drink?", PS, ["beverage", "ice"], False),
    ("Which item should I order?", PS, ["item"], False),
    ("Would you prefer Medium Coke Zero?", PS, ["beverage"], False),
    ("Should I use No Ice?", PS, ["ice"], False),
    ("Which soda do you want?", PS, ["beverage"], True),
    ("What size of beverage do you need?", PS, ["beverage"], True),
    ("Do you have a preference for the beverage?", PS, ["beverage"], False),
    ("Which ice option works for you?", PS, ["ice"], False),
    ("What beverage and which ice would you like?", PS, ["beverage", "ice"], True),
    ("Is Medium Coke Zero the right drink?", PS, ["beverage"], False),
    ("Which meal item is it?", PS, ["item"], False),
    ("Do you want the soda with ice?", PS, ["beverage", "ice"], False),
    ("When should I add the ice?", PS, ["ice"], False),
    ("Which drink goes with the meal?", PS, ["beverage"], False),
    ("What do you want for the beverage?", PS, ["beverage"], True),
    ("Could you confirm the ice preference?", PS, ["ice"], False),
    ("Do you need a specific item from the menu?", PS, ["item"], False),
    ("Which of Medium Coke or Medium Sprite do you want?", PS, [], True),
    ("Do you want fries with that?", PS, [], False),
    ("Should the order be delivered to your home?", PS, [], False),
    ("Can I apply a coupon code?", PS, [], False),
    ("Is a receipt required?", PS, [], False),
    ("Do you want extra ketchup?", PS, [], False),
    ("Should I schedule the pickup for noon?", PS, [], False),
    ("Would a dessert be welcome?", PS, [], False),
    ("Are there any allergies I should know about?", PS, [], False),
    ("Is this for delivery or dine-in?", PS, [], False),
    ("Could I add a toy to the order?", PS, [], False),
    ("What would you like?", PS, [], True),
    ("What do you want to order?", PS, [], True),
    ("Which meal are you looking for?", PS, [], True),
    ("What should I get for you?", PS, [], True),
    ("What are you hungry for, anything you like?", PS, [], True),
    ("Should I tap the confirm button?", None, [], False),
    ("Where is the checkout button?", None, [], False),
    ("Do I need to scroll down to find it?", None, [], False),
    ("Should I click Add to Cart now?", None, [], False),
    ("Can I press the back key on the keyboard?", None, [], False),
    ("Is the toggle for ice on this screen?", None, [], False),
    ("Should I swipe left on the menu?", None, [], False),
    ("Which icon opens the drinks page?", None, [], False),
    ("Do I tap the checkbox first?", None, [], False),
    ("Is there a slider for the amount?", None, [], False),
    ("I have added the meal to the cart.", OTHER, [], False),
    ("The payment went through.", OTHER, [], False),
    ("Starting the checkout process now.", OTHER, [], False),
    ("Order placed successfully.", OTHER, [], False),
    ("I finished adding everything.", OTHER, [], False),
]

# Cognitive gaps of the burger task, per unclear level.
GAP = {"Incomplete": ["beverage", "ice"],
       "Ambiguous": ["item", "beverage", "ice"]}
ANCHORS = ["item"]


def _expected(classification: str | None, matched: list[str],
              open_ended: bool, clarity: str) -> object:
    if classification is None:
        return "refusal"  # UI mechanics are refused before any policy
    if clarity in ("Detailed", "Standard"):
        return "refusal"
    if classification == OTHER:
        return "refusal"
    if matched:
        return {"reveal": matched}
    if open_ended:
        fallback = [a for a in ANCHORS if a in GAP[clarity]]
        if fallback:
            return {"reveal": fallback}
    return "no_preference"


def build_corpus() -> tuple[list[dict], dict]:
    entries = []
    script: dict[str, dict] = {}
    for question, classification, matched, open_ended in CORPUS:
        entry = {
            "question": question,
            "classification": classification,
            "matched_ids": matched,
            "expect": {
                clarity: _expected(classification, matched, open_ended, clarity)
                for clarity in ("Detailed", "Standard", "Incomplete", "Ambiguous")
            },
        }
        entries.append(entry)
        if classification is not None:
            request = OracleRequest(
                OraclePurpose.INQUIRY_CLASSIFY, {"question": question})
            script[request.digest()] = {
                "classification": classification,
                "_request": {"question": question},
            }
    return entries, script


# ---------------------------------------------------------------------------
# Rater annotation fixture (against the golden run's verdicts)


def build_annotations() -> dict:
    # System vectors mirror the bundled golden run (both mcd episodes miss
    # the ice requirement and skip its step). The two unanimously-wrong items
    # per family keep the label marginals mixed, so chance-corrected
    # agreement stays well away from the all-positive degeneracy.
    return {
        "raters": ["r1", "r2", "r3"],
        "packets": [
            {
                "packet": "mcd_filet_meal_Ambiguous",
                "outcome": {"system": [1, 1, 0],
                          "raters": [[1, 1, 0], [1, 1, 0], [1, 0, 0]]},
                "step": {"system": [1, 1, 1, 0, 1, 1],
                           "raters": [[1, 1, 1, 0, 1, 1], [1, 1, 1, 0, 1, 1],
                                      [1, 1, 1, 0, 1, 1]]},
                "fills": {"gap": ["beverage", "ice", "item"],
                          "system": ["beverage", "item"],
                          "raters": [["beverage", "item"], ["item"],
                                     ["beverage", "item"]]},
            },
            {
                "packet": "mcd_filet_meal_Incomplete",
                "outcome": {"system": [1, 1, 0],
                          "raters": [[1, 1, 0], [1, 1, 0], [1, 1, 0]]},
                "step": {"system": [1, 1, 1, 0, 1, 1],
                           "raters": [[1, 1, 1, 0, 1, 1], [1, 1, 1, 0, 1, 1],
                                      [1, 1, 1, 0, 1, 1]]},
                "fills": {"gap": ["beverage", "ice"],
                          "system": ["beverage"],
                          "raters": [["beverage"], ["beverage"],
                                     ["beverage", "ice"]]},
            },
            {
                "packet": "coffee_latte_Incomplete",
                "outcome": {"system": [1, 1],
                          "raters": [[1, 1], [1, 1], [1, 1]]},
                "step": {"system": [1, 1, 1],
                           "raters": [[1, 1, 1], [1, 1, 1], [1, 1, 1]]},
                "fills": {"gap": ["size"], "system": ["size"],
                          "raters": [["size"], ["size"], []]},
            },
            {
                "packet": "msg_forward_Detailed",
                "outcome": {"system": [1, 1],
                          "raters": [[1, 1], [1, 1], [0, 1]]},
                "step": {"system": [1, 1, 1, 1],
                           "raters": [[1, 0, 1, 1], [1, 1, 1, 1], [1, 1, 1, 1]]},
            },
            {
                "packet": "alarm_setup_Ambiguous",
                "outcome": {"system": [1, 1, 1, 1, 1],
                          "raters": [[1, 1, 1, 1, 1], [1, 1, 1, 1, 1],
                                     [1, 1, 1, 1, 1]]},
                "step": {"system": [1] * 9,
                           "raters": [[1, 1, 1, 1, 0, 1, 1, 1, 1],
                                      [1, 1, 1, 1, 0, 1, 1, 1, 1],
                                      [1] * 9]},
                "fills": {
                    "gap": ["label", "repeat", "snooze", "sound", "time"],
                    "system": ["label", "repeat", "snooze", "sound", "time"],
                    "raters": [
                        ["label", "repeat", "snooze", "sound", "time"],
                        ["label", "repeat", "snooze", "sound", "time"],
                        ["repeat", "snooze", "sound", "time"]]},
            },
            {
                "packet": "battery_saver_Incomplete",
                "outcome": {"system": [1, 1],
                          "raters": [[1, 1], [1, 1], [1, 1]]},
                "step": {"system": [1, 1, 1, 1],
                           "raters": [[1, 1, 0, 1], [1, 1, 1, 1], [1, 1, 1, 1]]},
                "fills": {"gap": ["threshold"], "system": ["threshold"],
                          "raters": [[], [], ["threshold"]]},
            },
        ],
    }


# ---------------------------------------------------------------------------


def dump(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8")


def main() -> int:
    apps = {
        "burgerhub": burgerhub_app(),
        "beanbar": beanbar_app(),
        "chatly": chatly_app(),
        "clockwork": clockwork_app(),
        "powerctl": powerctl_app(),
        "notely": notely_app(),
    }
    for name, doc in apps.items():
        problems = validate_app(MockApp.from_dict(doc))
        if problems:
            print(f"app {name} invalid: {problems}", file=sys.stderr)
            return 1
        dump(FIXTURES / "suite" / "apps" / f"{name}.json", doc)

    tasks = build_tasks()
    manifest = {
        "tasks": [t.task_id for t in tasks],
        "tags": {t.task_id: suite_manifest_entry(t) for t in tasks},
    }
    dump(FIXTURES / "suite" / "manifest.json", manifest)
    for task in tasks:
        (FIXTURES / "suite" / "tasks").mkdir(parents=True, exist_ok=True)
        save_task(task, FIXTURES / "suite" / "tasks" / f"{task.task_id}.json")
    dump(FIXTURES / "suite" / "hypernyms.json", HYPERNYMS)

    problems = validate_suite(load_suite(FIXTURES / "suite"))
    if problems:
        print(f"suite invalid: {problems}", file=sys.stderr)
        return 1

    entries, script = build_corpus()
    if len(entries) != 50:
        print(f"corpus must hold 50 inquiries, found {len(entries)}",
              file=sys.stderr)
        return 1
    dump(FIXTURES / "corpus" / "inquiries.json", entries)
    dump(FIXTURES / "corpus" / "oracle_script.json", script)

    dump(FIXTURES / "annotations" / "ratings.json", build_annotations())

    dump(FIXTURES / "run_golden.json", {
        "suite": "suite",
        "output_dir": "runs",
        "run_id": "golden",
        "oracle": {"kind": "heuristic"},
        "agent": {"kind": "plan", "asking": True, "quirks": GOLDEN_QUIRKS},
    })

    print(f"fixtures written under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
