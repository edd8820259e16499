"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CtxMonkeyError(Exception):
    pass


class ParseError(CtxMonkeyError, ValueError):
    """Malformed input text. Carries an optional 1-based line and 0-based column."""

    def __init__(self, reason: str, line: int | None = None, column: int | None = None):
        self.reason = reason
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {reason}" if where else reason)


class InvariantError(CtxMonkeyError, ValueError):
    pass


class InvalidConfig(CtxMonkeyError, ValueError):
    pass


class ConfigError(CtxMonkeyError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DeviceError(CtxMonkeyError):
    pass


class ConnectionLost(DeviceError):
    pass


class AuthRequired(DeviceError):
    pass


class InjectionError(DeviceError):
    pass


class InstallError(DeviceError):
    pass


class LaunchError(DeviceError):
    pass


class DumpError(DeviceError):
    pass
