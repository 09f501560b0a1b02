"""Device sandbox: wire protocol, mock device, transparent capture proxy."""

from .wire import (  # noqa: F401
    DecodedCommand,
    FrameError,
    append_frame,
    decode_shell_command,
    read_frame,
    write_frame,
)
