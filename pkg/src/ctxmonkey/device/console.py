"""Client for the emulator's plaintext console (telnet-style, CRLF lines)."""

from __future__ import annotations

import logging
import os
import socket
from pathlib import Path

from ..errors import AuthRequired, ConnectionLost
from .base import ConsoleResponse

log = logging.getLogger(__name__)

DEFAULT_PORT = 5554
DEFAULT_TOKEN_PATH = "~/.emulator_console_auth_token"


def read_token(path: str | os.PathLike | None) -> str | None:
    if not path:
        return None
    p = Path(path).expanduser()
    try:
        return p.read_text().strip() or None
    except OSError:
        return None


class EmulatorConsole:
    def __init__(self, host: str = "localhost", port: int = DEFAULT_PORT, token: str | None = None, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.token = token
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._file = None

    def connect(self) -> "EmulatorConsole":
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            raise ConnectionLost(f"cannot reach console at {self.host}:{self.port}: {exc}") from exc
        self._file = self._sock.makefile("rb")
        banner = self._read_reply()
        if any("Authentication required" in line for line in banner.lines):
            if not self.token:
                self.close()
                raise AuthRequired("console requires an auth token and none is configured")
            reply = self._send("auth " + self.token)
            if not reply.ok:
                self.close()
                raise AuthRequired(f"console rejected auth token: {reply.error}")
        return self

    def _readline(self) -> str:
        try:
            raw = self._file.readline()
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc
        if not raw:
            raise ConnectionLost("console closed the connection")
        return raw.decode("utf-8", "replace").rstrip("\r\n")

    def _read_reply(self) -> ConsoleResponse:
        lines = []
        while True:
            line = self._readline()
            lines.append(line)
            if line == "OK" or line.startswith("KO"):
                return ConsoleResponse.from_lines(lines)

    def _send(self, cmd: str) -> ConsoleResponse:
        try:
            self._sock.sendall(cmd.encode("utf-8") + b"\r\n")
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc
        return self._read_reply()

    def command(self, cmd: str) -> ConsoleResponse:
        cmd = cmd.strip()
        if not cmd:
            return ConsoleResponse(True, [])
        if self._sock is None:
            self.connect()
        log.debug("console> %s", cmd)
        return self._send(cmd)

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.sendall(b"quit\r\n")
            except OSError:
                pass
            self._sock.close()
        self._sock = None
        self._file = None

    def __enter__(self):
        return self.connect()

    def __exit__(self, *exc):
        self.close()
