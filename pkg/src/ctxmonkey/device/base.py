"""Backend interface and the contextual-event command map."""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator

from ..errors import InjectionError
from ..scenario import ContextualEvent, EventKind

ROTATIONS = {
    "ROTATION_PORTRAIT": 0,
    "ROTATION_LANDSCAPE": 1,
    "ROTATION_REVERSE_PORTRAIT": 2,
    "ROTATION_REVERSE_LANDSCAPE": 3,
}
# gsm states that also apply to voice registration; on/off are data-only
GSM_REGISTRATION_STATES = frozenset({"home", "roaming", "searching", "denied", "unregistered"})


@dataclass
class ConsoleResponse:
    ok: bool
    lines: list[str] = field(default_factory=list)

    @classmethod
    def from_lines(cls, lines: list[str]) -> "ConsoleResponse":
        """Build from console output whose last line is ``OK`` or ``KO:...``."""
        if not lines:
            raise ValueError("console reply has no terminal line")
        last = lines[-1]
        if last == "OK":
            return cls(True, lines[:-1])
        if last.startswith("KO"):
            return cls(False, lines)
        raise ValueError(f"not a terminal console line: {last!r}")

    @property
    def error(self) -> str:
        return self.lines[-1] if self.lines and not self.ok else ""


@dataclass(frozen=True)
class Command:
    """One device action: an emulator console line or an adb shell argv."""

    channel: str  # "console" | "shell"
    args: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join(self.args)


def _console(text: str) -> Command:
    return Command("console", (text,))


def _shell(*argv: str) -> Command:
    return Command("shell", argv)


def event_commands(event: ContextualEvent) -> list[Command]:
    """The full command map from a contextual event to device commands."""
    kind, v = event.kind, event.value
    if kind is EventKind.NetworkStatus:
        return [_console(f"network speed {v}")]
    if kind is EventKind.NetworkDelay:
        return [_console(f"network delay {v}")]
    if kind is EventKind.GsmProfile:
        cmds = [_console(f"gsm data {v}")]
        if v in GSM_REGISTRATION_STATES:
            cmds.append(_console(f"gsm voice {v}"))
        return cmds
    if kind is EventKind.UserRotation:
        return [
            _shell("settings", "put", "system", "accelerometer_rotation", "0"),
            _shell("settings", "put", "system", "user_rotation", str(ROTATIONS[v])),
        ]
    if kind is EventKind.KeyPress:
        return [_shell("input", "keyevent", v)]
    if kind is EventKind.AirplaneMode:
        on = v == "on"
        return [
            _shell("settings", "put", "global", "airplane_mode_on", "1" if on else "0"),
            _shell("am", "broadcast", "-a", "android.intent.action.AIRPLANE_MODE", "--ez", "state", "true" if on else "false"),
        ]
    raise AssertionError(f"unmapped kind {kind}")


class LogcatStream:
    """Iterator over logcat lines that can be cancelled from another thread.

    ``error`` is set when the stream ended because the connection dropped.
    """

    def __init__(self, lines: Iterator[str], close_hook=None):
        self._lines = lines
        self._close_hook = close_hook
        self.closed = threading.Event()
        self.error: str | None = None

    def __iter__(self):
        return self

    def __next__(self) -> str:
        if self.closed.is_set():
            raise StopIteration
        return next(self._lines)

    def close(self) -> None:
        self.closed.set()
        if self._close_hook is not None:
            self._close_hook()


class DeviceBackend(ABC):
    supports_console: bool = False
    serial: str = ""

    def __init__(self):
        self._console_lock = threading.Lock()

    # transport primitives

    @abstractmethod
    def console_command(self, cmd: str) -> ConsoleResponse: ...

    @abstractmethod
    def shell(self, argv: list[str] | tuple[str, ...]) -> ConsoleResponse: ...

    # contextual events

    def apply_event(self, event: ContextualEvent) -> ConsoleResponse:
        lines: list[str] = []
        for cmd in event_commands(event):
            if cmd.channel == "console":
                with self._console_lock:
                    resp = self.console_command(cmd.args[0])
            else:
                resp = self.shell(cmd.args)
            if not resp.ok:
                raise InjectionError(f"{cmd} failed: {resp.error or '; '.join(resp.lines)}")
            lines.extend(resp.lines)
        return ConsoleResponse(True, lines)

    # app lifecycle

    @abstractmethod
    def install(self, apk_path: str, package_id: str) -> None: ...

    @abstractmethod
    def uninstall(self, package_id: str) -> None: ...

    @abstractmethod
    def is_installed(self, package_id: str) -> bool: ...

    @abstractmethod
    def launch_activity(self, package_id: str, activity: str) -> None: ...

    # logs

    @abstractmethod
    def logcat_clear(self) -> None: ...

    @abstractmethod
    def logcat_stream(self) -> LogcatStream: ...

    # ui

    @abstractmethod
    def ui_dump(self) -> str: ...

    @abstractmethod
    def input_text(self, text: str) -> None: ...

    @abstractmethod
    def scroll_down(self) -> None: ...

    @abstractmethod
    def focus_at(self, x: int, y: int) -> None:
        """Give input focus to whatever is at screen point (x, y)."""

    # clock

    @abstractmethod
    def now(self) -> datetime: ...

    @abstractmethod
    def sleep(self, secs: float, cancel: threading.Event) -> bool:
        """Wait ``secs`` or until ``cancel`` is set. Returns True if cancelled."""

    def close(self) -> None:
        pass
