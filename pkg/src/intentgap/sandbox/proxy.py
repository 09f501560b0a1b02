"""Transparent capture proxy between an agent and a device endpoint.

Every byte the agent sends is forwarded verbatim, so the device sees a
stream indistinguishable from a direct connection. Around each decoded
input event the proxy takes pre/post screen snapshots through a separate
in-process capture channel (never through the relayed socket), appends an
action record to the trace, and enforces the step budget: the budget-th
action still runs, the next one is refused with a FAIL reply that is never
forwarded, and the session is sealed as budget-exhausted.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass

from .mockdevice import MockDevice
from .trace import ActionRecord, BlobStore, Snapshot, TraceWriter
from .wire import FAIL, OKAY, FrameError, append_frame, read_frame_raw

logger = logging.getLogger(__name__)

DEFAULT_STEP_BUDGET = 25


class CaptureChannel:
    """Out-of-band screen access used only by the harness."""

    def snapshot(self) -> Snapshot:
        raise NotImplementedError


class MockCapture(CaptureChannel):
    """In-process capture for a mock device: doc plus rendered frame."""

    def __init__(self, device: MockDevice, blobs: BlobStore):
        self.device = device
        self.blobs = blobs

    def snapshot(self) -> Snapshot:
        return Snapshot(
            doc=self.device.snapshot_doc(),
            png_digest=self.blobs.put(self.device.render_png()))


class NullCapture(CaptureChannel):
    """For devices without a side channel; steps stay undescribed."""

    def snapshot(self) -> Snapshot:
        return Snapshot(None, None)


@dataclass
class _ConnState:
    client_file: object
    client_sock: socket.socket


class CaptureProxy:
    """One proxy instance guards one evaluation episode."""

    def __init__(
        self,
        backend: tuple[str, int],
        capture: CaptureChannel,
        trace: TraceWriter,
        blobs: BlobStore,
        step_budget: int = DEFAULT_STEP_BUDGET,
        session=None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.backend = backend
        self.capture = capture
        self.trace = trace
        self.blobs = blobs
        self.step_budget = step_budget
        self.session = session
        self.steps_taken = 0
        self._budget_sealed = False
        self._lock = threading.Lock()
        proxy = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                try:
                    proxy._handle_connection(self.rfile, self.wfile)
                except FrameError as exc:
                    logger.debug("proxy connection ended: %s", exc)

        class _Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._tcp = _Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    # -- lifecycle ---------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def start(self) -> "CaptureProxy":
        self._thread = threading.Thread(target=self._tcp.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "CaptureProxy":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- relay -------------------------------------------------------------

    def _handle_connection(self, client_r, client_w) -> None:
        from .wire import decode_shell_command

        raw, payload = read_frame_raw(client_r)
        request = payload.decode("utf-8", "replace")
        pending = [raw]

        if request.startswith("host:transport:"):
            # Acknowledge the handshake ourselves so the service frame
            # arrives before any backend traffic: a refused action must
            # leave no trace on the device side, not even a transport.
            client_w.write(OKAY)
            client_w.flush()
            raw, payload = read_frame_raw(client_r)
            request = payload.decode("utf-8", "replace")
            pending.append(raw)

        decoded = None
        if request.startswith("shell:"):
            decoded = decode_shell_command(request[len("shell:"):])
            if decoded.is_input and self._refuse_if_over_budget(decoded, client_w):
                return

        pre = None
        if decoded is not None and decoded.is_input:
            pre = self.capture.snapshot()
            if self.session is not None:
                self.session.mark_running()

        backend_sock = socket.create_connection(self.backend)
        try:
            backend_r = backend_sock.makefile("rb")
            backend_sock.sendall(b"".join(pending))

            if len(pending) == 2:
                # Swallow the transport status we already answered; a FAIL
                # here (bad serial) becomes the service's reply instead.
                status = self._read_exact(backend_r, 4)
                if status == FAIL:
                    frame_raw, _ = read_frame_raw(backend_r)
                    client_w.write(FAIL)
                    client_w.write(frame_raw)
                    return

            if request == "host:devices":
                status = self._read_exact(backend_r, 4)
                client_w.write(status)
                frame_raw, _ = read_frame_raw(backend_r)
                client_w.write(frame_raw)
                return

            status = self._read_exact(backend_r, 4)
            client_w.write(status)
            if status == FAIL:
                frame_raw, _ = read_frame_raw(backend_r)
                client_w.write(frame_raw)
                return

            # OKAY: raw output until the device closes the connection.
            chunks = []
            while True:
                chunk = backend_r.read(65536)
                if not chunk:
                    break
                client_w.write(chunk)
                chunks.append(chunk)
            client_w.flush()
            body = b"".join(chunks)
        finally:
            backend_sock.close()

        if decoded is None:
            return
        if decoded.is_input:
            post = self.capture.snapshot()
            self.trace.action(ActionRecord(
                seq=self.trace.next_seq(), kind=decoded.kind,
                command=decoded.raw, pre=pre, post=post))
        elif decoded.kind == "screencap":
            digest = self.blobs.put(body)
            self.trace.screencap(digest)
        elif decoded.kind == "other":
            logger.info("unclassified shell command forwarded: %r", decoded.raw)
            self.trace.note("passthrough", {"command": decoded.raw})

    def _refuse_if_over_budget(self, decoded, client_w) -> bool:
        if not decoded.is_input:
            return False
        with self._lock:
            if self.steps_taken >= self.step_budget:
                refused = True
            else:
                self.steps_taken += 1
                refused = False
        if not refused:
            return False
        client_w.write(FAIL + append_frame(
            f"step budget of {self.step_budget} exhausted".encode("utf-8")))
        client_w.flush()
        first_seal = False
        with self._lock:
            if not self._budget_sealed:
                self._budget_sealed = True
                first_seal = True
        if first_seal:
            self.trace.note("refused", {
                "command": decoded.raw, "reason": "BUDGET_EXHAUSTED"})
            if self.session is not None:
                self.session.abort("BUDGET_EXHAUSTED")
        return True

    @staticmethod
    def _read_exact(reader, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = reader.read(n - len(buf))
            if not chunk:
                raise FrameError("backend closed early")
            buf += chunk
        return buf
