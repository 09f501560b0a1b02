"""HTTP face of the interaction interface.

Three endpoints per session, all UTF-8 JSON:

    GET  /session/{id}/instruction
    POST /session/{id}/ask     {"question": "..."}
    POST /session/{id}/finish  {"reason": "..."}

Errors come back as JSON objects with a machine-readable ``code`` field so
an agent can distinguish a closed session from a malformed request.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .simulator import Session, SessionError

logger = logging.getLogger(__name__)


class SessionRegistry:
    """Thread-safe id -> Session map shared by server and runner."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            if session.session_id in self._sessions:
                raise ValueError(f"duplicate session id '{session.session_id}'")
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            return self._sessions[session_id]

    def remove(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)


# SessionError code -> HTTP status
_ERROR_STATUS = {
    "SESSION_CLOSED": 409,
    "INSTRUCTION_NOT_SERVED": 409,
    "TASK_LEVEL_UNAVAILABLE": 404,
}


class _Handler(BaseHTTPRequestHandler):
    registry: SessionRegistry  # set by the server factory

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("http: " + fmt, *args)

    def _send(self, status: int, doc: dict) -> None:
        body = json.dumps(doc, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, detail: str = "") -> None:
        self._send(status, {"code": code, "detail": detail})

    def _route(self, method: str):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if len(parts) != 3 or parts[0] != "session":
            self._error(404, "NOT_FOUND", self.path)
            return None
        _, session_id, action = parts
        expected = {"instruction": "GET", "ask": "POST", "finish": "POST"}.get(action)
        if expected is None:
            self._error(404, "NOT_FOUND", self.path)
            return None
        if expected != method:
            self._error(405, "METHOD_NOT_ALLOWED", f"{action} requires {expected}")
            return None
        try:
            session = self.registry.get(session_id)
        except KeyError:
            self._error(404, "UNKNOWN_SESSION", session_id)
            return None
        return session, action

    def _body(self) -> dict | None:
        length = int(self.headers.get("Content-Length", 0) or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            self._error(400, "BAD_REQUEST", f"body is not UTF-8 JSON: {exc}")
            return None
        if not isinstance(doc, dict):
            self._error(400, "BAD_REQUEST", "body must be a JSON object")
            return None
        return doc

    def do_GET(self):
        routed = self._route("GET")
        if routed is None:
            return
        session, _ = routed
        try:
            text = session.serve_instruction()
        except SessionError as exc:
            self._error(_ERROR_STATUS.get(exc.code, 409), exc.code, exc.detail)
            return
        self._send(200, {
            "session": session.session_id,
            "clarity": session.clarity.value,
            "state": session.state.value,
            "instruction": text,
        })

    def do_POST(self):
        routed = self._route("POST")
        if routed is None:
            return
        session, action = routed
        doc = self._body()
        if doc is None:
            return
        try:
            if action == "ask":
                if "question" not in doc or not isinstance(doc["question"], str):
                    self._error(400, "BAD_REQUEST", "missing string field 'question'")
                    return
                response = session.ask(doc["question"])
                self._send(200, {"session": session.session_id, "response": response})
            else:
                reason = doc.get("reason", "AGENT_DONE")
                if not isinstance(reason, str):
                    self._error(400, "BAD_REQUEST", "'reason' must be a string")
                    return
                state = session.finish(reason)
                self._send(200, {"session": session.session_id, "state": state.value})
        except SessionError as exc:
            self._error(_ERROR_STATUS.get(exc.code, 409), exc.code, exc.detail)


class InteractionServer:
    """Threaded HTTP server bound to an ephemeral port by default."""

    def __init__(self, registry: SessionRegistry, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"registry": registry})
        self.registry = registry
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "InteractionServer":
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "InteractionServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
