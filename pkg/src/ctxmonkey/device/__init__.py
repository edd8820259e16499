from .adb import EmulatorBackend
from .base import Command, ConsoleResponse, DeviceBackend, LogcatStream, event_commands
from .console import EmulatorConsole
from .sim import SimConsoleServer, SimRule, SimScreen, SimScript, SimulatedBackend, SimWidget

__all__ = [
    "Command",
    "ConsoleResponse",
    "DeviceBackend",
    "EmulatorBackend",
    "EmulatorConsole",
    "LogcatStream",
    "event_commands",
    "SimConsoleServer",
    "SimRule",
    "SimScreen",
    "SimScript",
    "SimulatedBackend",
    "SimWidget",
]
