"""Emulator backend: console over TCP plus ``adb`` subprocesses."""

from __future__ import annotations

import logging
import re
import shlex
import subprocess
import threading
from datetime import datetime

from ..errors import DumpError, InstallError, LaunchError
from .base import ConsoleResponse, DeviceBackend, LogcatStream
from .console import EmulatorConsole

log = logging.getLogger(__name__)

DUMP_PATH = "/sdcard/window_dump.xml"
_SIZE_RE = re.compile(r"(\d+)x(\d+)")


class EmulatorBackend(DeviceBackend):
    supports_console = True

    def __init__(self, adb: str = "adb", console: EmulatorConsole | None = None, serial: str | None = None, timeout: float = 120.0):
        super().__init__()
        self.adb = adb
        self.console = console or EmulatorConsole()
        self.serial = serial or f"emulator-{self.console.port}"
        self.timeout = timeout
        self._screen: tuple[int, int] | None = None

    def _adb(self, *args: str, check: bool = False) -> subprocess.CompletedProcess:
        argv = [self.adb, "-s", self.serial, *args]
        log.debug("$ %s", shlex.join(argv))
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
        if check and proc.returncode != 0:
            raise subprocess.CalledProcessError(proc.returncode, argv, proc.stdout, proc.stderr)
        return proc

    def console_command(self, cmd: str) -> ConsoleResponse:
        return self.console.command(cmd)

    def shell(self, argv) -> ConsoleResponse:
        proc = self._adb("shell", *argv)
        lines = proc.stdout.splitlines()
        if proc.returncode != 0:
            lines.append(f"KO: exit {proc.returncode}: {proc.stderr.strip()}")
        return ConsoleResponse(proc.returncode == 0, lines)

    def is_installed(self, package_id: str) -> bool:
        proc = self._adb("shell", "pm", "path", package_id)
        return proc.returncode == 0 and any(l.startswith("package:") for l in proc.stdout.splitlines())

    def uninstall(self, package_id: str) -> None:
        if not self.is_installed(package_id):
            return
        proc = self._adb("uninstall", package_id)
        if proc.returncode != 0 or "Failure" in proc.stdout:
            raise InstallError(f"uninstall {package_id} failed: {proc.stderr.strip() or proc.stdout.strip()}")

    def install(self, apk_path: str, package_id: str) -> None:
        # always a fresh copy
        self.uninstall(package_id)
        proc = self._adb("install", apk_path)
        if proc.returncode != 0 or "Failure" in proc.stdout:
            raise InstallError(f"install {apk_path} failed: {proc.stderr.strip() or proc.stdout.strip()}")

    def launch_activity(self, package_id: str, activity: str) -> None:
        proc = self._adb("shell", "am", "start", "-W", "-n", f"{package_id}/{activity}")
        if proc.returncode != 0 or "Error" in proc.stdout:
            raise LaunchError(f"cannot start {activity}: {proc.stdout.strip()} {proc.stderr.strip()}")

    def logcat_clear(self) -> None:
        self._adb("logcat", "-c")

    def logcat_stream(self) -> LogcatStream:
        proc = subprocess.Popen(
            [self.adb, "-s", self.serial, "logcat", "-v", "threadtime"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            errors="replace",
        )

        def lines():
            for line in proc.stdout:
                yield line.rstrip("\n")
            if proc.wait() != 0 and not stream.closed.is_set():
                stream.error = f"logcat exited with {proc.returncode}: {proc.stderr.read().strip()}"

        stream = LogcatStream(lines(), close_hook=proc.terminate)
        return stream

    def ui_dump(self) -> str:
        self._adb("shell", "uiautomator", "dump", DUMP_PATH)
        proc = self._adb("exec-out", "cat", DUMP_PATH)
        xml = proc.stdout
        start = xml.find("<hierarchy")
        end = xml.rfind("</hierarchy>")
        if proc.returncode != 0 or start < 0 or end < 0:
            raise DumpError(f"no hierarchy in dump reply: {xml[:200]!r}")
        return xml[start : end + len("</hierarchy>")]

    def screen_size(self) -> tuple[int, int]:
        if self._screen is None:
            out = self._adb("shell", "wm", "size").stdout
            sizes = _SIZE_RE.findall(out)
            if not sizes:
                raise DumpError(f"cannot read screen size from {out!r}")
            w, h = sizes[-1]  # override size wins when present
            self._screen = (int(w), int(h))
        return self._screen

    def input_text(self, text: str) -> None:
        # `input text` treats %s as space and the device shell re-parses the string
        escaped = "".join("%s" if c == " " else ("\\" + c if not c.isalnum() else c) for c in text)
        self._adb("shell", "input", "text", escaped)

    def focus_at(self, x: int, y: int) -> None:
        self._adb("shell", "input", "tap", str(x), str(y))

    def scroll_down(self) -> None:
        w, h = self.screen_size()
        self._adb("shell", "input", "swipe", str(w // 2), str(h * 3 // 4), str(w // 2), str(h // 4), "400")

    def now(self) -> datetime:
        return datetime.now()

    def sleep(self, secs: float, cancel: threading.Event) -> bool:
        return cancel.wait(max(secs, 0))

    def close(self) -> None:
        self.console.close()
