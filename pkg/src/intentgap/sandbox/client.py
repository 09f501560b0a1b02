"""Minimal wire-protocol client used by agents and tests."""

from __future__ import annotations

import json
import socket

from .wire import FAIL, OKAY, read_frame, write_frame


class DeviceRefusal(Exception):
    """The endpoint answered FAIL; the message explains why."""


class DeviceClient:
    """One request per connection, mirroring how command-line tools behave."""

    def __init__(self, address: tuple[str, int], serial: str = "mock-0001",
                 timeout_s: float = 10.0):
        self.address = tuple(address)
        self.serial = serial
        self.timeout_s = timeout_s

    def _request(self, services: list[str]) -> bytes:
        sock = socket.create_connection(self.address, timeout=self.timeout_s)
        try:
            reader = sock.makefile("rb")
            body = b""
            for i, service in enumerate(services):
                write_frame(sock, service.encode("utf-8"))
                status = reader.read(4)
                if status == FAIL:
                    raise DeviceRefusal(read_frame(reader).decode("utf-8", "replace"))
                if status != OKAY:
                    raise DeviceRefusal(f"unexpected status {status!r}")
                if i == len(services) - 1:
                    if service == "host:devices":
                        body = read_frame(reader)
                    else:
                        chunks = []
                        while True:
                            chunk = reader.read(65536)
                            if not chunk:
                                break
                            chunks.append(chunk)
                        body = b"".join(chunks)
            return body
        finally:
            sock.close()

    def devices(self) -> str:
        return self._request(["host:devices"]).decode("utf-8")

    def shell(self, command: str) -> bytes:
        return self._request([f"host:transport:{self.serial}", f"shell:{command}"])

    def tap(self, x: int, y: int) -> bytes:
        return self.shell(f"input tap {x} {y}")

    def swipe(self, x1: int, y1: int, x2: int, y2: int, duration_ms: int = 300) -> bytes:
        return self.shell(f"input swipe {x1} {y1} {x2} {y2} {duration_ms}")

    def text(self, value: str) -> bytes:
        return self.shell("input text " + value.replace(" ", "%s"))

    def keyevent(self, code: int) -> bytes:
        return self.shell(f"input keyevent {code}")

    def screencap(self) -> bytes:
        return self.shell("screencap -p")

    def screendoc(self) -> dict:
        return json.loads(self.shell("screendoc").decode("utf-8"))
