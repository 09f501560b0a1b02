"""Deterministic mock device: screens, transition table, wire server.

A mock app is a finite-state UI: named screens with labelled tap regions
and a transition table mapping (screen, input event) to a successor screen,
a feedback string, a canonical operation description, and flag updates.
Goal predicates over the flag state report per-requirement completion on a
capture-only audit channel that agents never see.
"""

from __future__ import annotations

import io
import json
import logging
import socketserver
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..taskmodel import InjectionCommand, StateInjectionSpec, ValidationError, Violation
from .wire import (
    FAIL,
    OKAY,
    DecodedCommand,
    FrameError,
    append_frame,
    decode_shell_command,
    read_frame,
    swipe_direction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Element:
    label: str
    region: tuple[int, int, int, int]  # x, y, w, h

    def contains(self, x: int, y: int) -> bool:
        rx, ry, rw, rh = self.region
        return rx <= x < rx + rw and ry <= y < ry + rh


@dataclass(frozen=True)
class Screen:
    id: str
    page: str
    elements: tuple[Element, ...]

    def element(self, label: str) -> Element | None:
        for e in self.elements:
            if e.label == label:
                return e
        return None


@dataclass(frozen=True)
class TransitionRule:
    screen: str
    on: dict                 # matcher: kind plus kind-specific fields
    to: str                  # successor screen id (may equal ``screen``)
    operation: str           # canonical operation text, e.g. "Tap [Pay]"
    feedback: str            # shown when the screen does not change
    set_flags: dict = field(default_factory=dict)

    def matches(self, screen: Screen, event: DecodedCommand) -> bool:
        want = self.on.get("kind")
        if want != event.kind:
            return False
        if event.kind == "tap":
            element = screen.element(self.on["element"])
            return element is not None and element.contains(
                event.args["x"], event.args["y"])
        if event.kind == "text":
            expect = self.on.get("value")
            return expect is None or expect == event.args["text"]
        if event.kind == "keyevent":
            return self.on.get("code") == event.args["code"]
        if event.kind == "swipe":
            want_dir = self.on.get("direction")
            return want_dir is None or want_dir == swipe_direction(event.args)
        return False


@dataclass(frozen=True)
class MockApp:
    app_id: str
    initial_screen: str
    screens: dict[str, Screen]
    transitions: tuple[TransitionRule, ...]
    goals: dict[str, dict]        # requirement id -> flag equality conjunction
    defaults: dict[str, object]   # initial flag state (system defaults)
    public: dict = field(default_factory=dict)  # agent-visible hints

    @classmethod
    def from_dict(cls, d: dict) -> "MockApp":
        screens = {}
        for s in d["screens"]:
            screens[s["id"]] = Screen(
                id=s["id"], page=s["page"],
                elements=tuple(
                    Element(e["label"], tuple(e["region"])) for e in s.get("elements", ())))
        return cls(
            app_id=d["app_id"],
            initial_screen=d["initial_screen"],
            screens=screens,
            transitions=tuple(
                TransitionRule(
                    screen=t["screen"], on=t["on"], to=t["to"],
                    operation=t["operation"], feedback=t.get("feedback", ""),
                    set_flags=t.get("set_flags", {}))
                for t in d.get("transitions", ())),
            goals=d.get("goals", {}),
            defaults=d.get("defaults", {}),
            public=d.get("public", {}),
        )

    @classmethod
    def load(cls, path: str | Path) -> "MockApp":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def validate_app(app: MockApp) -> list[Violation]:
    """Static checks: region overlap, rule sanity, screen reachability."""
    out: list[Violation] = []
    if app.initial_screen not in app.screens:
        out.append(Violation("UNKNOWN_SCREEN", f"initial '{app.initial_screen}'"))
    for screen in app.screens.values():
        seen: set[str] = set()
        for e in screen.elements:
            if e.label in seen:
                out.append(Violation(
                    "DUPLICATE_ELEMENT", f"'{e.label}' repeats on '{screen.id}'"))
            seen.add(e.label)
        for i, a in enumerate(screen.elements):
            for b in screen.elements[i + 1:]:
                ax, ay, aw, ah = a.region
                bx, by, bw, bh = b.region
                if ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah:
                    out.append(Violation(
                        "REGION_OVERLAP",
                        f"'{a.label}' and '{b.label}' overlap on '{screen.id}'"))
    matchers: set[str] = set()
    for rule in app.transitions:
        if rule.screen not in app.screens:
            out.append(Violation("UNKNOWN_SCREEN", f"rule on '{rule.screen}'"))
            continue
        if rule.to not in app.screens:
            out.append(Violation("UNKNOWN_SCREEN", f"rule targets '{rule.to}'"))
        if rule.on.get("kind") == "tap":
            label = rule.on.get("element")
            if app.screens[rule.screen].element(label) is None:
                out.append(Violation(
                    "UNKNOWN_ELEMENT", f"'{label}' not on screen '{rule.screen}'"))
        key = json.dumps(
            {"screen": rule.screen, "on": rule.on}, sort_keys=True)
        if key in matchers:
            out.append(Violation(
                "AMBIGUOUS_RULE", f"two rules share matcher {key} on '{rule.screen}'"))
        matchers.add(key)
    # Reachability over the transition graph from the initial screen.
    if app.initial_screen in app.screens:
        reached = {app.initial_screen}
        frontier = [app.initial_screen]
        while frontier:
            current = frontier.pop()
            for rule in app.transitions:
                if rule.screen == current and rule.to not in reached:
                    reached.add(rule.to)
                    frontier.append(rule.to)
        for sid in sorted(set(app.screens) - reached):
            out.append(Violation("UNREACHABLE_SCREEN", f"'{sid}'"))
    return out


@dataclass(frozen=True)
class ExecutionResult:
    matched: bool
    prev_screen: str
    screen: str
    operation: str
    feedback: str | None  # None for unmatched input (a no-op)


def _noop_operation(event: DecodedCommand) -> str:
    if event.kind == "tap":
        return f"Tap at ({event.args['x']}, {event.args['y']})"
    if event.kind == "swipe":
        return f"Swipe {swipe_direction(event.args)}"
    if event.kind == "text":
        return f"Type '{event.args['text']}'"
    if event.kind == "keyevent":
        return f"Press key {event.args['code']}"
    return event.raw


class MockDevice:
    """One app instance plus mutable UI state; thread-safe via one lock."""

    def __init__(self, app: MockApp, serial: str = "mock-0001"):
        problems = validate_app(app)
        if problems:
            raise ValidationError("; ".join(str(p) for p in problems))
        self.app = app
        self.serial = serial
        self._lock = threading.Lock()
        self.reset()

    def reset(self) -> None:
        with getattr(self, "_lock", threading.Lock()):
            self.screen_id = self.app.initial_screen
            self.flags: dict[str, object] = dict(self.app.defaults)
            self.last_operation: str | None = None
            self.last_feedback: str | None = None
            self.last_matched: bool = False

    @property
    def screen(self) -> Screen:
        return self.app.screens[self.screen_id]

    def execute(self, event: DecodedCommand) -> ExecutionResult:
        """Apply one input event; unmatched input is a same-screen no-op."""
        with self._lock:
            screen = self.screen
            hits = [r for r in self.app.transitions
                    if r.screen == screen.id and r.matches(screen, event)]
            if len(hits) > 1:
                raise ValidationError(
                    f"AMBIGUOUS_RULE: {len(hits)} rules match {event.raw!r} "
                    f"on '{screen.id}'")
            prev = screen.id
            if not hits:
                op = _noop_operation(event)
                self.last_operation, self.last_feedback, self.last_matched = op, None, False
                return ExecutionResult(False, prev, prev, op, None)
            rule = hits[0]
            for flag, value in rule.set_flags.items():
                # "$text" stores the typed string itself
                if value == "$text" and event.kind == "text":
                    value = event.args["text"]
                self.flags[flag] = value
            self.screen_id = rule.to
            self.last_operation = rule.operation
            self.last_feedback = rule.feedback
            self.last_matched = True
            return ExecutionResult(True, prev, rule.to, rule.operation, rule.feedback)

    def goals(self) -> dict[str, bool]:
        return {
            rid: all(self.flags.get(flag) == want for flag, want in pred.items())
            for rid, pred in sorted(self.app.goals.items())
        }

    def agent_doc(self) -> dict:
        """What the agent may see: page label and interactable elements."""
        with self._lock:
            screen = self.screen
            return {
                "page": screen.page,
                "elements": [
                    {"label": e.label, "region": list(e.region)} for e in screen.elements
                ],
            }

    def snapshot_doc(self) -> dict:
        """Capture-channel view: agent doc plus the hidden audit channel."""
        doc = self.agent_doc()
        with self._lock:
            doc["audit"] = {
                "goals": self.goals(),
                "last_operation": self.last_operation,
                "last_feedback": self.last_feedback,
                "matched": self.last_matched,
            }
        return doc

    def render_png(self) -> bytes:
        """Deterministic frame: page title plus one box per element."""
        from PIL import Image, ImageDraw

        with self._lock:
            screen = self.screen
            img = Image.new("RGB", (360, 600), "white")
            draw = ImageDraw.Draw(img)
            draw.text((8, 4), screen.page, fill="black")
            draw.line([(0, 20), (360, 20)], fill="black")
            for e in screen.elements:
                x, y, w, h = e.region
                draw.rectangle([x, y, x + w - 1, y + h - 1], outline="black")
                draw.text((x + 3, y + 3), e.label, fill="black")
            buf = io.BytesIO()
            img.save(buf, format="PNG")
            return buf.getvalue()

    def apply_injection(self, spec: StateInjectionSpec) -> None:
        """Run device-preparation commands outside the audited wire path."""
        for cmd in spec.commands:
            self._apply_one(cmd)

    def _apply_one(self, cmd: InjectionCommand) -> None:
        if cmd.kind == "AppDataReset":
            self.reset()
        elif cmd.kind == "SettingPut":
            with self._lock:
                self.flags[cmd.payload["key"]] = cmd.payload["value"]
        elif cmd.kind == "AccountLogin":
            with self._lock:
                self.flags["logged_in_account"] = cmd.payload.get("account", "default")
        elif cmd.kind == "ShellCommand":
            self.execute(decode_shell_command(cmd.payload.get("command", "")))
        else:
            raise ValidationError(f"INJECTION_KIND: unknown kind '{cmd.kind}'")


def shell_output(device: MockDevice, command: DecodedCommand) -> bytes:
    """Response bytes for one shell service, mirroring a real device."""
    if command.is_input:
        result = device.execute(command)
        if not result.matched:
            return b""
        return (result.feedback or "").encode("utf-8")
    if command.kind == "screencap":
        return device.render_png()
    if command.kind == "screendoc":
        # Agent-visible structured screen description; no audit channel.
        return (json.dumps(device.agent_doc(), sort_keys=True) + "\n").encode("utf-8")
    logger.info("unknown shell command served verbatim: %r", command.raw)
    return b""


class DeviceServer:
    """Wire-protocol endpoint for one mock device.

    Accepts framed service requests: ``host:devices`` lists the device,
    ``host:transport:<serial>`` binds the connection, and a following
    ``shell:<cmd>`` streams its output then closes. Every byte received is
    appended to a per-connection receipt log so tests can prove a proxy in
    front of this server is invisible.
    """

    def __init__(self, device: MockDevice, host: str = "127.0.0.1", port: int = 0):
        self.device = device
        self.receipts: list[bytes] = []
        self._receipts_lock = threading.Lock()
        server = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                received = b""

                class _TeeReader:
                    def __init__(self, inner):
                        self.inner = inner

                    def read(self, n):
                        nonlocal received
                        chunk = self.inner.read(n)
                        received += chunk
                        return chunk

                reader = _TeeReader(self.rfile)
                try:
                    server._serve(reader, self.wfile)
                except FrameError as exc:
                    logger.debug("device connection ended: %s", exc)
                finally:
                    with server._receipts_lock:
                        server.receipts.append(received)

        class _Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._tcp = _Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    def _serve(self, reader, writer) -> None:
        request = read_frame(reader).decode("utf-8", "replace")
        if request == "host:devices":
            writer.write(OKAY + append_frame(
                f"{self.device.serial}\tdevice\n".encode("utf-8")))
            return
        if request.startswith("host:transport:"):
            serial = request.split(":", 2)[2]
            if serial != self.device.serial:
                writer.write(FAIL + append_frame(
                    f"device '{serial}' not found".encode("utf-8")))
                return
            writer.write(OKAY)
            writer.flush()
            request = read_frame(reader).decode("utf-8", "replace")
        if request.startswith("shell:"):
            command = decode_shell_command(request[len("shell:"):])
            writer.write(OKAY)
            writer.write(shell_output(self.device, command))
            return
        writer.write(FAIL + append_frame(
            f"unknown service '{request}'".encode("utf-8")))

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> "DeviceServer":
        self._thread = threading.Thread(target=self._tcp.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "DeviceServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
