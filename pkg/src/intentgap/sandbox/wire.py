"""Smart-socket wire protocol and shell-command decoding.

Requests are length-prefixed: four lowercase hex digits giving the payload
byte length, then the payload. Replies start with the literal ``OKAY`` or
``FAIL``; FAIL carries a framed error message, and a shell service streams
raw output until the server closes the connection.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass

OKAY = b"OKAY"
FAIL = b"FAIL"


class FrameError(ValueError):
    """Malformed length prefix or truncated payload."""


def append_frame(payload: bytes) -> bytes:
    if len(payload) > 0xFFFF:
        raise FrameError(f"payload too long: {len(payload)}")
    return b"%04x" % len(payload) + payload


def write_frame(sock, payload: bytes) -> None:
    sock.sendall(append_frame(payload))


def _read_exact(reader, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = reader.read(n - len(buf))
        if not chunk:
            raise FrameError(f"connection closed mid-frame ({len(buf)}/{n} bytes)")
        buf += chunk
    return buf


def read_frame(reader) -> bytes:
    """Read one framed message from a file-like binary reader."""
    return read_frame_raw(reader)[1]


def read_frame_raw(reader) -> tuple[bytes, bytes]:
    """Like read_frame but also returns the exact bytes off the wire,
    so a relay can forward them without re-encoding."""
    header = _read_exact(reader, 4)
    if not re.fullmatch(rb"[0-9a-f]{4}", header):
        raise FrameError(f"bad length prefix {header!r}")
    payload = _read_exact(reader, int(header, 16))
    return header + payload, payload


# ---------------------------------------------------------------------------
# Shell command decoding

# Kinds that count as device input: they advance the step budget and get
# pre/post screen snapshots.
INPUT_KINDS = ("tap", "swipe", "text", "keyevent")


@dataclass(frozen=True)
class DecodedCommand:
    """A classified shell command; unknown shapes pass through untouched."""

    kind: str  # tap | swipe | text | keyevent | screencap | screendoc | other
    raw: str
    args: dict

    @property
    def is_input(self) -> bool:
        return self.kind in INPUT_KINDS


def decode_text_argument(arg: str) -> str:
    """Reverse the on-the-wire text encoding (%s stands for a space)."""
    if len(arg) >= 2 and arg[0] == arg[-1] and arg[0] in "'\"":
        arg = arg[1:-1]
    return arg.replace("%s", " ")


def decode_shell_command(cmd: str) -> DecodedCommand:
    """Classify a shell command string, never raising on odd input."""
    try:
        tokens = shlex.split(cmd)
    except ValueError:
        tokens = cmd.split()
    if not tokens:
        return DecodedCommand("other", cmd, {})
    if tokens[0] == "input" and len(tokens) >= 2:
        sub = tokens[1]
        rest = tokens[2:]
        try:
            if sub == "tap" and len(rest) == 2:
                return DecodedCommand(
                    "tap", cmd, {"x": int(rest[0]), "y": int(rest[1])})
            if sub == "swipe" and len(rest) in (4, 5):
                args = {
                    "x1": int(rest[0]), "y1": int(rest[1]),
                    "x2": int(rest[2]), "y2": int(rest[3]),
                }
                if len(rest) == 5:
                    args["duration_ms"] = int(rest[4])
                return DecodedCommand("swipe", cmd, args)
            if sub == "text" and rest:
                # shlex already stripped quoting; undo only the %s encoding
                return DecodedCommand(
                    "text", cmd, {"text": " ".join(rest).replace("%s", " ")})
            if sub == "keyevent" and len(rest) == 1:
                return DecodedCommand("keyevent", cmd, {"code": int(rest[0])})
        except ValueError:
            return DecodedCommand("other", cmd, {})
    if tokens[0] == "screencap":
        return DecodedCommand("screencap", cmd, {"png": "-p" in tokens})
    if tokens[0] == "screendoc":
        return DecodedCommand("screendoc", cmd, {})
    return DecodedCommand("other", cmd, {})


def swipe_direction(args: dict) -> str:
    dx = args["x2"] - args["x1"]
    dy = args["y2"] - args["y1"]
    if abs(dx) >= abs(dy):
        return "right" if dx >= 0 else "left"
    return "down" if dy >= 0 else "up"
