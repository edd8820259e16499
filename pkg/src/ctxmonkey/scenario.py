"""Contextual events, seeded scenario generation and the scenario CSV codec.

CSV layout (LF line endings, no quoting)::

    duration,<duration_secs>
    <Kind>,<index>,<interval_secs>,<value>
    ...

Kinds appear in ``EventKind`` declaration order and events in index order.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import InvalidConfig, InvariantError, ParseError
from .prng import MASK64, XorShift64Star, derive_seed


class EventKind(str, Enum):
    NetworkStatus = "NetworkStatus"
    NetworkDelay = "NetworkDelay"
    GsmProfile = "GsmProfile"
    UserRotation = "UserRotation"
    KeyPress = "KeyPress"
    AirplaneMode = "AirplaneMode"

    def __str__(self) -> str:
        return self.value

    @property
    def ordinal(self) -> int:
        return _KIND_ORDER.index(self)


_KIND_ORDER = list(EventKind)

VOCABULARY: dict[EventKind, tuple[str, ...]] = {
    EventKind.NetworkStatus: ("gsm", "hscsd", "gprs", "edge", "umts", "hsdpa", "lte", "evdo", "full"),
    EventKind.NetworkDelay: ("gprs", "edge", "umts", "none"),
    EventKind.GsmProfile: ("home", "roaming", "searching", "denied", "unregistered", "off", "on"),
    EventKind.UserRotation: (
        "ROTATION_PORTRAIT",
        "ROTATION_LANDSCAPE",
        "ROTATION_REVERSE_PORTRAIT",
        "ROTATION_REVERSE_LANDSCAPE",
    ),
    EventKind.KeyPress: (
        "KEYCODE_BACK",
        "KEYCODE_HOME",
        "KEYCODE_MENU",
        "KEYCODE_VOLUME_UP",
        "KEYCODE_VOLUME_DOWN",
        "KEYCODE_ENTER",
    ),
    EventKind.AirplaneMode: ("on", "off"),
}

# misspellings seen in the wild, mapped to the canonical token
_ALIASES: dict[EventKind, dict[str, str]] = {
    EventKind.UserRotation: {"ROTATION_REVERSE_POTRAIT": "ROTATION_REVERSE_PORTRAIT"},
}


def parse_kind(token: str) -> EventKind:
    try:
        return EventKind(token)
    except ValueError:
        raise ValueError(f"unknown event kind {token!r}") from None


def canonical_value(kind: EventKind, token: str) -> str:
    """Return the vocabulary token for ``token``, resolving known aliases."""
    token = _ALIASES.get(kind, {}).get(token, token)
    if token not in VOCABULARY[kind]:
        raise ValueError(f"value {token!r} is not valid for {kind.value}")
    return token


@dataclass(frozen=True)
class ContextualEvent:
    kind: EventKind
    index: int
    interval_secs: int
    value: str

    def __post_init__(self):
        if not isinstance(self.kind, EventKind):
            object.__setattr__(self, "kind", EventKind(self.kind))
        if self.index < 0:
            raise InvariantError(f"negative index {self.index}")
        if self.interval_secs < 1:
            raise InvariantError(f"interval must be >= 1, got {self.interval_secs}")
        if self.value not in VOCABULARY[self.kind]:
            raise InvariantError(f"value {self.value!r} not in {self.kind.value} vocabulary")


@dataclass(frozen=True)
class Scenario:
    """Per-kind event sequences sharing one total duration.

    Empty sequences are dropped and keys are stored in enum order, so two
    scenarios with the same events always compare equal.
    """

    duration_secs: int
    sequences: Mapping[EventKind, tuple[ContextualEvent, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.duration_secs < 1:
            raise InvariantError(f"duration must be >= 1, got {self.duration_secs}")
        normalized: dict[EventKind, tuple[ContextualEvent, ...]] = {}
        for kind in EventKind:
            events = tuple(self.sequences.get(kind, ()))
            if not events:
                continue
            for i, ev in enumerate(events):
                if ev.kind is not kind:
                    raise InvariantError(f"{ev.kind.value} event filed under {kind.value}")
                if ev.index != i:
                    raise InvariantError(f"{kind.value} indices not consecutive: expected {i}, got {ev.index}")
            total = sum(ev.interval_secs for ev in events)
            if total != self.duration_secs:
                raise InvariantError(
                    f"{kind.value} intervals sum to {total}, duration is {self.duration_secs}"
                )
            normalized[kind] = events
        unknown = set(self.sequences) - set(EventKind)
        if unknown:
            raise InvariantError(f"unknown kinds {unknown}")
        object.__setattr__(self, "sequences", normalized)

    @property
    def kinds(self) -> list[EventKind]:
        return list(self.sequences)

    def events(self) -> list[ContextualEvent]:
        return [ev for seq in self.sequences.values() for ev in seq]

    def sha256(self) -> str:
        return hashlib.sha256(write_scenario_csv(self).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    min_interval_secs: int
    max_interval_secs: int
    duration_secs: int
    enabled_kinds: frozenset[EventKind] = frozenset(EventKind)

    def validate(self) -> None:
        if not 0 <= self.seed <= MASK64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.min_interval_secs < 1:
            raise InvalidConfig(f"min interval must be >= 1, got {self.min_interval_secs}")
        if self.min_interval_secs > self.max_interval_secs:
            raise InvalidConfig(
                f"min interval {self.min_interval_secs} exceeds max interval {self.max_interval_secs}"
            )
        if self.max_interval_secs > self.duration_secs:
            raise InvalidConfig(
                f"max interval {self.max_interval_secs} exceeds duration {self.duration_secs}"
            )
        if not self.enabled_kinds:
            raise InvalidConfig("no event kinds enabled")


def kind_rng(seed: int, kind: EventKind) -> XorShift64Star:
    # per-kind streams: enabling another kind never perturbs this one
    return XorShift64Star(derive_seed(seed, kind.ordinal))


def generate_scenario(config: GeneratorConfig) -> Scenario:
    config.validate()
    sequences: dict[EventKind, tuple[ContextualEvent, ...]] = {}
    for kind in EventKind:
        if kind not in config.enabled_kinds:
            continue
        rng = kind_rng(config.seed, kind)
        events = []
        total = 0
        while total < config.duration_secs:
            interval = rng.randint(config.min_interval_secs, config.max_interval_secs)
            if total + interval > config.duration_secs:
                interval = config.duration_secs - total
            value = rng.choice(VOCABULARY[kind])
            events.append(ContextualEvent(kind, len(events), interval, value))
            total += interval
        sequences[kind] = tuple(events)
    return Scenario(config.duration_secs, sequences)


def write_scenario_csv(s: Scenario) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["duration", s.duration_secs])
    for seq in s.sequences.values():
        for ev in seq:
            writer.writerow([ev.kind.value, ev.index, ev.interval_secs, ev.value])
    return buf.getvalue()


def _int_field(token: str, what: str, lineno: int) -> int:
    token = token.strip()
    if not token.isdigit():
        raise ParseError(f"{what} must be a non-negative integer, got {token!r}", line=lineno)
    return int(token)


def parse_scenario_csv(text: str) -> Scenario:
    rows = [
        (lineno, row)
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
        if row and any(cell.strip() for cell in row)
    ]
    if not rows:
        raise ParseError("empty scenario: missing duration header", line=1)
    lineno, header = rows[0]
    if len(header) != 2 or header[0].strip() != "duration":
        raise ParseError("first record must be 'duration,<secs>'", line=lineno)
    duration = _int_field(header[1], "duration", lineno)

    sequences: dict[EventKind, list[ContextualEvent]] = {}
    for lineno, row in rows[1:]:
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        try:
            kind = parse_kind(row[0].strip())
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        index = _int_field(row[1], "index", lineno)
        interval = _int_field(row[2], "interval", lineno)
        try:
            value = canonical_value(kind, row[3].strip())
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if interval < 1:
            raise InvariantError(f"line {lineno}: interval must be >= 1")
        sequences.setdefault(kind, []).append(ContextualEvent(kind, index, interval, value))
    return Scenario(duration, {k: tuple(v) for k, v in sequences.items()})


def filter_scenario(s: Scenario, applicable: Iterable[EventKind]) -> Scenario:
    keep = set(applicable)
    return Scenario(s.duration_secs, {k: v for k, v in s.sequences.items() if k in keep})
