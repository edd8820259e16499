"""INI tool configuration.

Every key may be overridden by ``CTXMONKEY_<SECTION>_<KEY>`` in the
environment (e.g. ``CTXMONKEY_GENERATOR_SEED=7``). ``generator.seed`` is the
only required key.
"""

from __future__ import annotations

import configparser
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, InvalidConfig
from .scenario import EventKind, GeneratorConfig

log = logging.getLogger(__name__)

ENV_PREFIX = "CTXMONKEY"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> int | None:
    return int(s) if s.strip() else None


def _names(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


# (section, key) -> (attribute, parser, default, required)
SCHEMA = {
    ("sdk", "adb"): ("adb", str, "adb", False),
    ("sdk", "aapt"): ("aapt", str, "aapt", False),
    ("console", "host"): ("console_host", str, "localhost", False),
    ("console", "port"): ("console_port", int, 5554, False),
    ("console", "auth_token_path"): ("auth_token_path", str, "~/.emulator_console_auth_token", False),
    ("generator", "seed"): ("seed", int, None, True),
    ("generator", "min_interval"): ("min_interval", int, 5, False),
    ("generator", "max_interval"): ("max_interval", int, 12, False),
    ("generator", "duration"): ("duration", int, 60, False),
    ("executor", "mode"): ("mode", str, "all", False),
    ("executor", "activities"): ("activities", _names, (), False),
    ("executor", "text_fuzz"): ("text_fuzz", _bool, True, False),
    ("executor", "text_seed"): ("text_seed", int, 0, False),
    ("executor", "per_activity_duration"): ("per_activity_duration", _opt_int, None, False),
    ("executor", "fatal_stop"): ("fatal_stop", _bool, True, False),
    ("executor", "max_scrolls"): ("max_scrolls", int, 20, False),
    ("analysis", "window_before"): ("window_before", float, 10.0, False),
    ("analysis", "window_after"): ("window_after", float, 2.0, False),
    ("output", "dir"): ("output_dir", str, "ctxmonkey-run", False),
}


@dataclass
class ToolConfig:
    seed: int = 0
    adb: str = "adb"
    aapt: str = "aapt"
    console_host: str = "localhost"
    console_port: int = 5554
    auth_token_path: str = "~/.emulator_console_auth_token"
    min_interval: int = 5
    max_interval: int = 12
    duration: int = 60
    mode: str = "all"
    activities: tuple[str, ...] = ()
    text_fuzz: bool = True
    text_seed: int = 0
    per_activity_duration: int | None = None
    fatal_stop: bool = True
    max_scrolls: int = 20
    window_before: float = 10.0
    window_after: float = 2.0
    output_dir: str = "ctxmonkey-run"

    def generator_config(self, enabled_kinds=frozenset(EventKind), seed: int | None = None) -> GeneratorConfig:
        return GeneratorConfig(
            seed=self.seed if seed is None else seed,
            min_interval_secs=self.min_interval,
            max_interval_secs=self.max_interval,
            duration_secs=self.duration,
            enabled_kinds=frozenset(enabled_kinds),
        )

    def validate(self) -> None:
        try:
            self.generator_config().validate()
        except InvalidConfig as exc:
            raise ConfigError(str(exc), key="generator") from None
        if self.window_before < 0 or self.window_after < 0:
            raise ConfigError("windows must be non-negative", key="analysis")

    def require_sdk(self) -> None:
        for name in ("adb", "aapt"):
            if not getattr(self, name):
                raise ConfigError("path must be set for the real backend", key=f"sdk.{name}")


def _env_name(section: str, key: str) -> str:
    return f"{ENV_PREFIX}_{section}_{key}".upper()


def config_from_parser(cp: configparser.ConfigParser, env=None) -> ToolConfig:
    env = os.environ if env is None else env
    known = set(SCHEMA)
    for section in cp.sections():
        for key in cp[section]:
            if (section, key) not in known:
                log.warning("unknown config key %s.%s ignored", section, key)

    values = {}
    for (section, key), (attr, parse, default, required) in SCHEMA.items():
        raw = env.get(_env_name(section, key))
        if raw is None and cp.has_option(section, key):
            raw = cp.get(section, key)
        if raw is None:
            if required:
                raise ConfigError("missing required key", key=f"{section}.{key}")
            values[attr] = default
            continue
        try:
            values[attr] = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value {raw!r}: {exc}", key=f"{section}.{key}") from None
    cfg = ToolConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str | os.PathLike, env=None) -> ToolConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read(p, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    return config_from_parser(cp, env)


def default_config(env=None) -> ToolConfig:
    """Defaults for runs without a config file (seed defaults to 0)."""
    cp = configparser.ConfigParser()
    cp.read_dict({"generator": {"seed": "0"}})
    return config_from_parser(cp, env)

