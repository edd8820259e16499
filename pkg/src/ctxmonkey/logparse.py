"""logcat threadtime and executor-log parsing, and the merged timeline.

Neither log carries a year. Timestamps are materialized in the fixed leap
year 2000 (so 02-29 parses) and a run is assumed not to cross New Year.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Union

from .errors import ParseError
from .scenario import ContextualEvent, canonical_value, parse_kind

LOG_YEAR = 2000
LEVELS = "VDIWEF"


def normalize_stamp(ts: datetime, resolution: str = "ms") -> datetime:
    ts = ts.replace(year=LOG_YEAR, tzinfo=None)
    if resolution == "s":
        return ts.replace(microsecond=0)
    return ts.replace(microsecond=ts.microsecond // 1000 * 1000)


def format_seconds(ts: datetime) -> str:
    return ts.strftime("%m-%d %H:%M:%S")


def format_millis(ts: datetime) -> str:
    return ts.strftime("%m-%d %H:%M:%S.") + f"{ts.microsecond // 1000:03d}"


_STAMP_RE = re.compile(r"(\d\d)-(\d\d) (\d\d):(\d\d):(\d\d)(?:\.(\d{3}))?")


def parse_stamp(text: str) -> datetime:
    """Parse ``MM-DD HH:MM:SS`` or ``MM-DD HH:MM:SS.mmm``."""
    m = _STAMP_RE.fullmatch(text)
    if not m:
        raise ParseError(f"bad timestamp {text!r}")
    month, day, hour, minute, sec, ms = m.groups()
    try:
        # strptime is ~10x slower and this sits on every log line
        return datetime(LOG_YEAR, int(month), int(day), int(hour), int(minute), int(sec), int(ms or 0) * 1000)
    except ValueError:
        raise ParseError(f"bad timestamp {text!r}") from None


@dataclass(frozen=True)
class LogcatEntry:
    timestamp: datetime
    pid: int
    tid: int
    level: str
    tag: str
    message: str

    def format(self) -> str:
        return f"{format_millis(self.timestamp)} {self.pid:5d} {self.tid:5d} {self.level} {self.tag}: {self.message}"


@dataclass(frozen=True)
class InjectionRecord:
    timestamp: datetime  # second resolution
    event: ContextualEvent

    def format(self) -> str:
        ev = self.event
        return f"{format_seconds(self.timestamp)} {ev.kind.value} {ev.index} {ev.interval_secs} {ev.value}"


# threadtime: "MM-DD HH:MM:SS.mmm  PID  TID L Tag: message"
_STAGES = [
    ("date", re.compile(r"\d\d-\d\d")),
    ("space", re.compile(r" ")),
    ("time", re.compile(r"\d\d:\d\d:\d\d\.\d{3}")),
    ("space", re.compile(r"\s+")),
    ("pid", re.compile(r"\d+")),
    ("space", re.compile(r"\s+")),
    ("tid", re.compile(r"\d+")),
    ("space", re.compile(r"\s+")),
    ("level", re.compile(r"[VDIWEF]")),
    ("space", re.compile(r" +")),
    ("tag", re.compile(r"[^:]*?(?=\s*:(?: |$))")),
    ("colon", re.compile(r"\s*:(?: |$)")),
]
_DATE_PREFIX = re.compile(r"\d\d-\d\d ")


def parse_logcat_line(line: str) -> LogcatEntry | None:
    """Parse one threadtime line.

    Returns None for lines that are not log records (blank lines, buffer
    banners, anything without a leading date). Lines that start like a
    record but break the format raise ParseError with the failing column.
    """
    line = line.rstrip("\r\n")
    if not line.strip() or line.startswith("---------"):
        return None
    if not _DATE_PREFIX.match(line):
        return None
    pos = 0
    parts = {}
    for name, rx in _STAGES:
        m = rx.match(line, pos)
        if not m:
            raise ParseError(f"expected {name}", column=pos)
        parts[name] = m.group(0)
        pos = m.end()
    try:
        ts = parse_stamp(f"{parts['date']} {parts['time']}")
    except ParseError:
        raise ParseError("date/time out of range", column=0) from None
    return LogcatEntry(
        timestamp=ts,
        pid=int(parts["pid"]),
        tid=int(parts["tid"]),
        level=parts["level"],
        tag=parts["tag"].strip(),
        message=line[pos:],
    )


def parse_executor_line(line: str) -> InjectionRecord:
    tokens = line.split()
    if len(tokens) != 6:
        raise ParseError(f"expected 6 space-separated fields, got {len(tokens)}")
    date, time, kind_tok, idx_tok, iv_tok, value_tok = tokens
    if "." in time:
        raise ParseError("executor timestamps have second resolution")
    ts = parse_stamp(f"{date} {time}")
    try:
        kind = parse_kind(kind_tok)
        value = canonical_value(kind, value_tok)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if not idx_tok.isdigit() or not iv_tok.isdigit():
        raise ParseError("index and interval must be non-negative integers")
    interval = int(iv_tok)
    if interval < 1:
        raise ParseError("interval must be >= 1")
    return InjectionRecord(ts, ContextualEvent(kind, int(idx_tok), interval, value))


def write_executor_log(records: Iterable[InjectionRecord]) -> str:
    return "".join(r.format() + "\n" for r in records)


def read_executor_log(text: str) -> list[InjectionRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_executor_line(line))
        except ParseError as exc:
            raise ParseError(exc.reason, line=lineno) from None
    return out


def read_logcat_log(text: str) -> tuple[list[LogcatEntry], int]:
    """Parse a logcat file, returning (entries, number of malformed lines)."""
    entries, bad = [], 0
    for line in text.splitlines():
        try:
            entry = parse_logcat_line(line)
        except ParseError:
            bad += 1
            continue
        if entry is not None:
            entries.append(entry)
    return entries, bad


INJECTED_RANK = 0
LOGCAT_RANK = 1


@dataclass(frozen=True)
class TimelineItem:
    timestamp: datetime
    source: Union[LogcatEntry, InjectionRecord]
    sequence: int

    @property
    def rank(self) -> int:
        return INJECTED_RANK if isinstance(self.source, InjectionRecord) else LOGCAT_RANK

    @property
    def key(self) -> tuple[datetime, int, int]:
        return (self.timestamp, self.rank, self.sequence)

    @property
    def is_injected(self) -> bool:
        return self.rank == INJECTED_RANK


def merge_timeline(logcat: Iterable[LogcatEntry], injected: Iterable[InjectionRecord]) -> list[TimelineItem]:
    """Merge both logs by millisecond timestamp.

    Ties put injected records before logcat entries (a cause never sorts
    after a same-instant effect), then keep each source's input order.
    """
    inj = [TimelineItem(normalize_stamp(r.timestamp), r, i) for i, r in enumerate(injected)]
    cat = [TimelineItem(normalize_stamp(e.timestamp), e, i) for i, e in enumerate(logcat)]
    # inputs should already be ordered; device logs from several threads can be slightly off
    for items in (inj, cat):
        if any(a.key > b.key for a, b in zip(items, items[1:])):
            items.sort(key=lambda item: item.key)
    return list(heapq.merge(inj, cat, key=lambda item: item.key))
