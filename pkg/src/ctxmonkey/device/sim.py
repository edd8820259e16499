"""Deterministic simulated emulator.

The simulator runs on a virtual clock that only moves when the executor
sleeps. Fault rules from a ``SimScript`` turn injected events (or elapsed
time) into W/E/F logcat lines, and each activity gets a synthetic scrollable
screen of widgets. ``SimConsoleServer`` exposes the console side over TCP so
the real console client can be exercised against it.
"""

from __future__ import annotations

import collections
import json
import logging
import socketserver
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

from ..errors import DumpError, InstallError, LaunchError
from ..logparse import format_millis, parse_stamp
from ..scenario import VOCABULARY, ContextualEvent, EventKind
from .base import Command, ConsoleResponse, DeviceBackend, LogcatStream

log = logging.getLogger(__name__)

SYSTEM_PID = 512
DRAIN_TIMEOUT = 5.0  # real seconds to wait for the logcat reader to catch up
EDIT_TEXT = "android.widget.EditText"
TEXT_VIEW = "android.widget.TextView"


@dataclass
class SimWidget:
    class_name: str
    resource_id: str
    height: int = 100
    text: str = ""

    @property
    def editable(self) -> bool:
        return "EditText" in self.class_name


@dataclass
class SimScreen:
    widgets: list[SimWidget] = field(default_factory=list)
    endless: bool = False  # infinite feed of TextViews after the widgets

    @classmethod
    def with_fields(cls, n: int, height: int = 100, package: str = "app") -> "SimScreen":
        return cls([SimWidget(EDIT_TEXT, f"{package}:id/field_{i}", height) for i in range(n)])


@dataclass
class SimRule:
    """Emit one logcat line (or a crash block for level F) when triggered.

    Event rules fire when the count of injected events matching ``kind`` /
    ``value`` (any event when unset) reaches ``after_events`` (1 when unset).
    Time rules fire ``after_secs`` after the first activity launch.
    """

    level: str
    message: str
    tag: str = ""
    after_events: int | None = None
    kind: EventKind | None = None
    value: str | None = None
    after_secs: float | None = None
    activity: str | None = None
    repeat: bool = False

    def __post_init__(self):
        if self.level not in ("V", "D", "I", "W", "E", "F"):
            raise ValueError(f"bad rule level {self.level!r}")
        if self.kind is not None and not isinstance(self.kind, EventKind):
            self.kind = EventKind(self.kind)
        if not self.tag:
            self.tag = "AndroidRuntime" if self.level == "F" else "SimApp"

    @property
    def timed(self) -> bool:
        return self.after_secs is not None

    def matches_event(self, ev: ContextualEvent) -> bool:
        if self.kind is not None and ev.kind is not self.kind:
            return False
        return self.value is None or ev.value == self.value


@dataclass
class SimScript:
    package: str = "com.example.app"
    pid: int = 4242
    start: str = "03-19 00:36:30"
    screen: tuple[int, int] = (1080, 1920)
    installed: bool = True
    screens: dict[str, SimScreen] = field(default_factory=dict)
    rules: list[SimRule] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "SimScript":
        package = d.get("package", "com.example.app")
        screens = {}
        for name, spec in d.get("screens", {}).items():
            widgets = []
            for w in spec.get("widgets", []):
                rid = w.get("id", "")
                if rid and ":" not in rid:
                    rid = f"{package}:id/{rid}"
                widgets.append(SimWidget(w.get("class", EDIT_TEXT), rid, int(w.get("height", 100)), w.get("text", "")))
            n = int(spec.get("fields", 0))
            h = int(spec.get("field_height", 100))
            widgets += [SimWidget(EDIT_TEXT, f"{package}:id/field_{i}", h) for i in range(n)]
            screens[name] = SimScreen(widgets, bool(spec.get("endless", False)))
        rules = [SimRule(**r) for r in d.get("rules", [])]
        return cls(
            package=package,
            pid=int(d.get("pid", 4242)),
            start=d.get("start", "03-19 00:36:30"),
            screen=tuple(d.get("screen", (1080, 1920))),
            installed=bool(d.get("installed", True)),
            screens=screens,
            rules=rules,
        )

    @classmethod
    def load(cls, path: str | Path) -> "SimScript":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def ensure_activities(self, activities, fields: int = 2) -> None:
        for act in activities:
            self.screens.setdefault(act, SimScreen.with_fields(fields, package=self.package))


class _Channel:
    """Line queue with join(timeout): the simulator waits on it for the reader."""

    def __init__(self, initial=()):
        self._items = collections.deque(initial)
        self._cv = threading.Condition()
        self.unfinished = len(self._items)

    def put(self, line: str) -> None:
        with self._cv:
            self._items.append(line)
            self.unfinished += 1
            self._cv.notify_all()

    def get(self, timeout: float) -> str | None:
        with self._cv:
            if not self._items:
                self._cv.wait(timeout)
            return self._items.popleft() if self._items else None

    def task_done(self) -> None:
        with self._cv:
            self.unfinished -= 1
            self._cv.notify_all()

    def abandon(self) -> None:
        with self._cv:
            self._items.clear()
            self.unfinished = 0
            self._cv.notify_all()

    def join(self, timeout: float) -> bool:
        with self._cv:
            return self._cv.wait_for(lambda: self.unfinished <= 0, timeout)


class SimulatedBackend(DeviceBackend):
    supports_console = True

    def __init__(self, script: SimScript | None = None, serial: str = "emulator-sim"):
        super().__init__()
        self.script = script or SimScript()
        self.serial = serial
        self._lock = threading.RLock()
        self.clock = parse_stamp(self.script.start)
        self.installed: set[str] = {self.script.package} if self.script.installed else set()
        self.package_log: list[tuple[str, str]] = []  # (action, package)
        self.commands: list[Command] = []
        self.state: dict[str, str] = {}
        self.keys: list[str] = []
        self.logcat: list[str] = []
        self._channel: _Channel | None = None
        self._stream: LogcatStream | None = None

        self.current_activity: str | None = None
        self.app_alive = False
        self.crashed = False
        self.launch_epoch: datetime | None = None
        self.rotation = 0
        self.scroll_offset = 0
        self.focused: SimWidget | None = None
        self.input_counts: collections.Counter[str] = collections.Counter()
        self.lost_inputs = 0
        self.dumps = 0
        self._rule_hits = [0] * len(self.script.rules)
        self._rule_fired = [False] * len(self.script.rules)

    # clock

    def now(self) -> datetime:
        return self.clock

    def sleep(self, secs: float, cancel: threading.Event) -> bool:
        with self._lock:
            target = self.clock + timedelta(seconds=max(secs, 0))
            self._fire_timed(target)
            self.clock = target
            channel = self._channel
        # let the log reader (and its fatal watchdog) see everything emitted so far
        if channel is not None and not channel.join(DRAIN_TIMEOUT):
            log.warning("logcat reader did not drain within %.1fs", DRAIN_TIMEOUT)
        return cancel.is_set()

    # logcat

    def _emit(self, level: str, tag: str, message: str, pid: int | None = None) -> None:
        pid = pid if pid is not None else self.script.pid
        line = f"{format_millis(self.clock)} {pid:5d} {pid:5d} {level} {tag}: {message}"
        self.logcat.append(line)
        if self._channel is not None:
            self._channel.put(line)

    def logcat_clear(self) -> None:
        with self._lock:
            self.logcat.clear()

    def logcat_stream(self) -> LogcatStream:
        with self._lock:
            if self._stream is not None:
                self._stream.close()
            channel = _Channel(self.logcat)
            self._channel = channel

        def lines():
            while not stream.closed.is_set():
                line = channel.get(0.05)
                if line is None:
                    continue
                try:
                    yield line
                finally:
                    channel.task_done()

        def on_close():
            with self._lock:
                if self._channel is channel:
                    self._channel = None
                    self._stream = None
            channel.abandon()

        stream = LogcatStream(lines(), close_hook=on_close)
        self._stream = stream
        return stream

    def drop_logcat(self, reason: str = "connection lost") -> None:
        """Simulate the log connection dying mid-stream."""
        stream = self._stream
        if stream is not None:
            stream.error = reason
            stream.close()

    # console / shell

    def console_command(self, cmd: str) -> ConsoleResponse:
        cmd = cmd.strip()
        if not cmd:
            return ConsoleResponse(True, [])
        with self._lock:
            self.commands.append(Command("console", (cmd,)))
            parts = cmd.split()
            if len(parts) == 3 and parts[0] == "network" and parts[1] in ("speed", "delay"):
                kind = EventKind.NetworkStatus if parts[1] == "speed" else EventKind.NetworkDelay
                if parts[2] in VOCABULARY[kind]:
                    self.state[f"network_{parts[1]}"] = parts[2]
                    return ConsoleResponse(True, [])
                return ConsoleResponse(False, [f"KO: bad {parts[1]} value {parts[2]!r}"])
            if len(parts) == 3 and parts[0] == "gsm" and parts[1] in ("data", "voice"):
                if parts[2] in VOCABULARY[EventKind.GsmProfile]:
                    self.state[f"gsm_{parts[1]}"] = parts[2]
                    return ConsoleResponse(True, [])
                return ConsoleResponse(False, [f"KO: bad gsm state {parts[2]!r}"])
            return ConsoleResponse(False, [f"KO: unknown command {cmd!r}"])

    def shell(self, argv) -> ConsoleResponse:
        argv = tuple(argv)
        with self._lock:
            self.commands.append(Command("shell", argv))
            if len(argv) == 5 and argv[:2] == ("settings", "put"):
                _, _, ns, key, value = argv
                self.state[f"{ns}.{key}"] = value
                if (ns, key) == ("system", "user_rotation"):
                    self._rotate(int(value))
                return ConsoleResponse(True, [])
            if len(argv) == 3 and argv[:2] == ("input", "keyevent"):
                self.keys.append(argv[2])
                return ConsoleResponse(True, [])
            if argv[:1] == ("am",) and "broadcast" in argv:
                return ConsoleResponse(True, ["Broadcast completed: result=0"])
            return ConsoleResponse(False, [f"KO: /system/bin/sh: {argv[0] if argv else ''}: not supported"])

    def apply_event(self, event: ContextualEvent) -> ConsoleResponse:
        resp = super().apply_event(event)
        with self._lock:
            self._fire_event_rules(event)
        return resp

    # rules

    def _rule_applies(self, i: int, rule: SimRule) -> bool:
        if self._rule_fired[i] and not rule.repeat:
            return False
        if self.crashed or not self.app_alive:
            return False
        return rule.activity is None or rule.activity == self.current_activity

    def _fire_event_rules(self, event: ContextualEvent) -> None:
        for i, rule in enumerate(self.script.rules):
            if rule.timed or not rule.matches_event(event) or not self._rule_applies(i, rule):
                continue
            self._rule_hits[i] += 1
            if self._rule_hits[i] == (rule.after_events or 1) or (rule.repeat and self._rule_hits[i] > (rule.after_events or 1)):
                self._fire(i, rule)

    def _fire_timed(self, target: datetime) -> None:
        if self.launch_epoch is None:
            return
        due = []
        for i, rule in enumerate(self.script.rules):
            if rule.timed and not self._rule_fired[i]:
                at = self.launch_epoch + timedelta(seconds=rule.after_secs)
                if at <= target:
                    due.append((at, i, rule))
        for at, i, rule in sorted(due, key=lambda t: (t[0], t[1])):
            self.clock = max(self.clock, at)
            if self._rule_applies(i, rule):
                self._fire(i, rule)
            self._rule_fired[i] = True

    def _fire(self, i: int, rule: SimRule) -> None:
        self._rule_fired[i] = True
        if rule.level != "F":
            self._emit(rule.level, rule.tag, rule.message)
            return
        pkg = self.script.package
        self._emit("E", rule.tag, "FATAL EXCEPTION: main")
        self._emit("E", rule.tag, f"Process: {pkg}, PID: {self.script.pid}")
        self._emit("E", rule.tag, rule.message)
        self._emit("W", "ActivityManager", f"Force finishing activity {pkg}/{self.current_activity}", pid=SYSTEM_PID)
        self.crashed = True
        self.app_alive = False

    # packages

    def is_installed(self, package_id: str) -> bool:
        return package_id in self.installed

    def uninstall(self, package_id: str) -> None:
        with self._lock:
            if package_id in self.installed:
                self.installed.discard(package_id)
                self.package_log.append(("uninstall", package_id))

    def install(self, apk_path: str, package_id: str) -> None:
        if not apk_path:
            raise InstallError("no apk path given")
        with self._lock:
            self.uninstall(package_id)
            self.installed.add(package_id)
            self.package_log.append(("install", package_id))

    def launch_activity(self, package_id: str, activity: str) -> None:
        with self._lock:
            if package_id not in self.installed:
                raise LaunchError(f"{package_id} is not installed")
            if activity not in self.script.screens:
                raise LaunchError(f"unknown activity {activity}")
            if self.launch_epoch is None:
                self.launch_epoch = self.clock
            if not self.app_alive:
                self._emit(
                    "I",
                    "ActivityManager",
                    f"Start proc {self.script.pid}:{package_id}/u0a85 for activity {{{package_id}/{activity}}}",
                    pid=SYSTEM_PID,
                )
                self.app_alive = True
            self._emit("I", "ActivityManager", f"START u0 {{cmp={package_id}/{activity}}} from uid 2000", pid=SYSTEM_PID)
            self.current_activity = activity
            self.scroll_offset = 0
            self.focused = None

    # ui

    @property
    def landscape(self) -> bool:
        return self.rotation in (1, 3)

    @property
    def viewport(self) -> tuple[int, int]:
        w, h = self.script.screen
        return (h, w) if self.landscape else (w, h)

    def _rotate(self, rotation: int) -> None:
        if rotation == self.rotation:
            return
        self.rotation = rotation
        # configuration change recreates the activity; field contents survive
        self.scroll_offset = 0
        self.focused = None

    def _screen(self) -> SimScreen:
        if self.current_activity is None:
            raise DumpError("no activity in foreground")
        return self.script.screens[self.current_activity]

    def _layout(self, until: int) -> list[tuple[int, SimWidget]]:
        """(absolute top, widget) pairs, extending endless feeds past ``until``."""
        screen = self._screen()
        out, y = [], 0
        for w in screen.widgets:
            out.append((y, w))
            y += w.height
        if screen.endless:
            i = 0
            while y <= until:
                w = SimWidget(TEXT_VIEW, f"{self.script.package}:id/feed", 100, f"item {i}")
                out.append((y, w))
                y += w.height
                i += 1
        return out

    def _visible(self) -> list[tuple[int, SimWidget]]:
        _, vh = self.viewport
        off = self.scroll_offset
        return [(top, w) for top, w in self._layout(off + vh) if top >= off and top + w.height <= off + vh]

    def ui_dump(self) -> str:
        with self._lock:
            self.dumps += 1
            vw, vh = self.viewport
            pkg = self.script.package
            root = ET.Element("hierarchy", rotation=str(self.rotation))
            frame = ET.SubElement(root, "node", {"index": "0", "text": "", "resource-id": "", "class": "android.widget.FrameLayout", "package": pkg, "bounds": f"[0,0][{vw},{vh}]"})
            scroll = ET.SubElement(frame, "node", {"index": "0", "text": "", "resource-id": f"{pkg}:id/content", "class": "android.widget.ScrollView", "package": pkg, "scrollable": "true", "bounds": f"[0,0][{vw},{vh}]"})
            for i, (top, w) in enumerate(self._visible()):
                y = top - self.scroll_offset
                ET.SubElement(scroll, "node", {
                    "index": str(i),
                    "text": w.text,
                    "resource-id": w.resource_id,
                    "class": w.class_name,
                    "package": pkg,
                    "editable": "true" if w.editable else "false",
                    "focused": "true" if w is self.focused else "false",
                    "bounds": f"[0,{y}][{vw},{y + w.height}]",
                })
            return "<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>" + ET.tostring(root, encoding="unicode")

    def scroll_down(self) -> None:
        with self._lock:
            _, vh = self.viewport
            off = self.scroll_offset
            layout = self._layout(off + 2 * vh)
            below = [top for top, w in layout if top + w.height > off + vh]
            if not below:
                return
            nxt = below[0] if below[0] > off else off + vh
            if not self._screen().endless:
                total = sum(w.height for _, w in layout)
                nxt = min(nxt, max(total - vh, 0))
            self.scroll_offset = max(nxt, off)
            self.focused = None

    def focus_at(self, x: int, y: int) -> None:
        with self._lock:
            vw, _ = self.viewport
            self.focused = None
            for top, w in self._visible():
                t = top - self.scroll_offset
                if 0 <= x < vw and t <= y < t + w.height:
                    self.focused = w if w.editable else None
                    return

    def input_text(self, text: str) -> None:
        with self._lock:
            if self.focused is None:
                self.lost_inputs += 1
                return
            self.focused.text += text
            self.input_counts[self.focused.resource_id] += 1


class _ConsoleHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: SimConsoleServer = self.server  # type: ignore[assignment]
        authed = server.token is None
        if authed:
            self._send(["Android Console: type 'help' for a list of commands", "OK"])
        else:
            self._send([
                "Android Console: Authentication required",
                "Android Console: type 'auth <auth_token>' to authenticate",
                "Android Console: you can find your <auth_token> in",
                "'~/.emulator_console_auth_token'",
                "OK",
            ])
        for raw in self.rfile:
            cmd = raw.decode("utf-8", "replace").strip()
            if cmd in ("quit", "exit"):
                return
            if not authed:
                if cmd == f"auth {server.token}":
                    authed = True
                    self._send(["Android Console: type 'help' for a list of commands", "OK"])
                else:
                    self._send(["KO: authentication token does not match ~/.emulator_console_auth_token"])
                continue
            resp = server.backend.console_command(cmd)
            self._send(resp.lines + ["OK"] if resp.ok else resp.lines)

    def _send(self, lines):
        self.wfile.write("".join(l + "\r\n" for l in lines).encode("utf-8"))
        self.wfile.flush()


class SimConsoleServer(socketserver.ThreadingTCPServer):
    """Serves a simulated backend's console on a local TCP port."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, backend: SimulatedBackend, token: str | None = None, host: str = "127.0.0.1", port: int = 0):
        self.backend = backend
        self.token = token
        super().__init__((host, port), _ConsoleHandler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "SimConsoleServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
