"""Reference agents that drive an episode over the public surfaces only.

An agent sees exactly what a production agent would: the served instruction,
answers to questions it sends over the interaction API, the app's published
control plan, and the structured screen description. The hidden audit
channel (goal flags, canonical operations) is never consulted.

The plan-driven agent is table-driven and deterministic. An app publishes,
in its agent-visible section, an ordered list of plan steps::

    {"always": [["tap", 25, 45]]}                       fixed actions
    {"slot": "size", "choices": {"Large": [...], ...},
     "default": "Medium"}                               pick one choice
    {"slot": "caption", "input": true}                  type a free value
    {"slot": "title", "input": true, "subject": true}   typed value that is
                                                        the task's subject

For a slot step the agent first scans the text it has (instruction plus any
answers so far) for a known value; if none is found and asking is enabled it
sends one clarifying question naming the slot, then falls back to the
published default. Optional quirks make an agent deliberately imperfect so
a harness can be exercised against known-bad behaviour.
"""

from __future__ import annotations

import os
import re
import subprocess
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import requests

from .sandbox.client import DeviceClient, DeviceRefusal


def _mentions(term: str, text: str) -> bool:
    """Word-bounded, case-insensitive containment."""

    pattern = r"(?<![a-z0-9])" + re.escape(term.lower()) + r"(?![a-z0-9])"
    return re.search(pattern, text.lower()) is not None


def scan_choice(choices: Iterable[str], texts: Sequence[str]) -> Optional[str]:
    """Longest known value mentioned anywhere in ``texts``.

    Longest-first ordering keeps "Medium Coke" from shadowing a mention of
    "Medium Coke Zero"; ties break alphabetically for determinism.
    """

    for key in sorted(choices, key=lambda k: (-len(k), k)):
        if any(_mentions(key, t) for t in texts):
            return key
    return None


def extract_value(slot: str, texts: Sequence[str], app_name: str = "") -> Optional[str]:
    """Free-text value for an input slot, e.g. a caption or title.

    Recognizes the two phrasings values arrive in: a per-slot clause
    ("choose X for the <slot>" / "I want X for the <slot>") and, for the
    task's subject itself, the leading "get the X in <app>" clause. The
    capture stops at clause punctuation so neighbouring clauses never bleed
    into the value.
    """

    patterns = [rf"(?:choose|i want) ([^;.]+?) for the {re.escape(slot)}\b"]
    if app_name:
        patterns.append(rf"get the ([^;.]+?) in {re.escape(app_name)}\b")
    for text in texts:
        for pattern in patterns:
            m = re.search(pattern, text, re.IGNORECASE)
            if m:
                return m.group(1).strip()
    return None


@dataclass(frozen=True)
class AgentQuirks:
    """Deliberate imperfections for harness exercises.

    preface_questions are sent before any device action; skip_ask names
    slots the agent will not ask about even when unresolved; trailing
    actions run after the plan completes.
    """

    preface_questions: tuple = ()
    skip_ask: frozenset = frozenset()
    trailing_actions: tuple = ()

    @classmethod
    def from_dict(cls, d: dict) -> "AgentQuirks":
        return cls(
            preface_questions=tuple(d.get("preface_questions", ())),
            skip_ask=frozenset(d.get("skip_ask", ())),
            trailing_actions=tuple(tuple(a) for a in d.get("trailing_actions", ())),
        )


@dataclass
class AgentReport:
    """What the agent did, for logging; evaluation never reads this."""

    instruction: str = ""
    questions: List[str] = field(default_factory=list)
    answers: List[str] = field(default_factory=list)
    actions: int = 0
    halted: bool = False
    finished: bool = False


class PlanAgent:
    """Deterministic agent over a published control plan."""

    def __init__(self, public: dict, asking: bool = True,
                 quirks: AgentQuirks | None = None):
        self.app_name = public.get("app", "")
        self.plan = public.get("plan", [])
        self.asking = asking
        self.quirks = quirks or AgentQuirks()

    # -- channels ------------------------------------------------------

    def _ask(self, session_url: str, question: str, report: AgentReport) -> str:
        if self._closed:
            return ""
        r = requests.post(f"{session_url}/ask", json={"question": question})
        if r.status_code != 200:
            self._closed = True
            return ""
        answer = r.json()["response"]
        report.questions.append(question)
        report.answers.append(answer)
        return answer

    def _act(self, device: DeviceClient, action: Sequence, report: AgentReport) -> None:
        if self._halted:
            return
        verb = action[0]
        try:
            if verb == "tap":
                device.tap(int(action[1]), int(action[2]))
            elif verb == "swipe":
                device.swipe(*[int(a) for a in action[1:5]])
            elif verb == "text":
                device.text(str(action[1]))
            elif verb == "keyevent":
                device.keyevent(int(action[1]))
            else:
                raise ValueError(f"unknown plan action verb '{verb}'")
            report.actions += 1
        except DeviceRefusal:
            self._halted = True

    # -- plan execution --------------------------------------------------

    def _resolve_choice(self, step: dict, corpus: List[str], session_url: str,
                        report: AgentReport) -> Optional[str]:
        slot = step["slot"]
        value = scan_choice(step["choices"], corpus)
        if value is None and self.asking and slot not in self.quirks.skip_ask:
            answer = self._ask(session_url, f"Which {slot} would you like?", report)
            if answer:
                corpus.append(answer)
                value = scan_choice(step["choices"], corpus)
        if value is None:
            value = step.get("default")
        return value

    def _resolve_input(self, step: dict, corpus: List[str], session_url: str,
                       report: AgentReport) -> Optional[str]:
        slot = step["slot"]
        # The "get the X in <app>" clause names the task's subject; reading
        # it for any other input slot would leak the subject into that slot.
        app = self.app_name if step.get("subject") else ""
        value = extract_value(slot, corpus, app)
        if value is None and self.asking and slot not in self.quirks.skip_ask:
            answer = self._ask(session_url, f"Which {slot} would you like?", report)
            if answer:
                corpus.append(answer)
                value = extract_value(slot, [answer])
        return value

    def run(self, session_url: str, device: DeviceClient) -> AgentReport:
        report = AgentReport()
        self._halted = False
        self._closed = False

        r = requests.get(f"{session_url}/instruction")
        r.raise_for_status()
        report.instruction = r.json()["instruction"]
        corpus = [report.instruction]

        device.screendoc()  # sanity read; non-input traffic is unbudgeted

        for question in self.quirks.preface_questions:
            answer = self._ask(session_url, question, report)
            if answer:
                corpus.append(answer)

        for step in self.plan:
            if self._halted:
                break
            if "always" in step:
                for action in step["always"]:
                    self._act(device, action, report)
                continue
            if step.get("input"):
                value = self._resolve_input(step, corpus, session_url, report)
                if value is not None:
                    self._act(device, ("text", value), report)
                continue
            value = self._resolve_choice(step, corpus, session_url, report)
            if value is not None:
                for action in step["choices"][value]:
                    self._act(device, action, report)

        for action in self.quirks.trailing_actions:
            self._act(device, action, report)

        if not self._closed:
            r = requests.post(f"{session_url}/finish", json={})
            report.finished = r.status_code == 200
        report.halted = self._halted
        return report


class CommandAgent:
    """Adapter that hands an episode to an external agent process.

    The child receives the two endpoints through its environment
    (SESSION_URL, DEVICE_HOST, DEVICE_PORT, DEVICE_SERIAL) and is expected
    to drive them itself. A nonzero exit is an agent crash and raises.
    """

    def __init__(self, argv: Sequence[str], timeout_s: float = 300.0):
        self.argv = list(argv)
        self.timeout_s = timeout_s

    def run(self, session_url: str, device: DeviceClient) -> AgentReport:
        env = dict(os.environ)
        env["SESSION_URL"] = session_url
        env["DEVICE_HOST"] = device.address[0]
        env["DEVICE_PORT"] = str(device.address[1])
        env["DEVICE_SERIAL"] = device.serial
        report = AgentReport()
        proc = subprocess.run(self.argv, env=env, timeout=self.timeout_s,
                              capture_output=True)
        if proc.returncode != 0:
            raise RuntimeError(
                f"agent process exited {proc.returncode}: "
                f"{proc.stderr.decode('utf-8', 'replace').strip()}")
        report.finished = True
        return report
