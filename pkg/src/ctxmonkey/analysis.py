"""Warning/Error/Fatal extraction, activity attribution and event adjacency."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Sequence

from .logparse import (
    InjectionRecord,
    LogcatEntry,
    TimelineItem,
    format_millis,
    format_seconds,
    merge_timeline,
    normalize_stamp,
    parse_stamp,
)
from .scenario import ContextualEvent, EventKind

SEVERITIES = ("W", "E", "F")
SEVERITY_NAMES = {"W": "Warning", "E": "Error", "F": "Fatal"}
UNKNOWN_ACTIVITY = "unknown"

# "Start proc 4242:com.example.app/u0a85 for activity {...}"
_START_PROC_RE = re.compile(r"Start proc (\d+):([\w.]+)")
_CRASH_PROCESS_RE = re.compile(r"Process: ([\w.]+), PID: (\d+)")


@dataclass
class AnalysisConfig:
    window_before_secs: float = 10.0
    window_after_secs: float = 2.0
    package: str | None = None
    pids: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.window_before_secs < 0 or self.window_after_secs < 0:
            raise ValueError("correlation windows must be non-negative")


class AppMatcher:
    """Decides whether a logcat entry belongs to the app under test.

    Pids come from the config and are harvested from ActivityManager
    ``Start proc`` lines as they are observed; tags naming the package are a
    fallback. With neither a package nor pids, everything matches.
    """

    def __init__(self, package: str | None = None, pids: Iterable[int] = ()):
        self.package = package
        self.pids = set(pids)

    def observe(self, entry: LogcatEntry) -> None:
        if not self.package:
            return
        m = _START_PROC_RE.search(entry.message)
        if m and m.group(2) == self.package:
            self.pids.add(int(m.group(1)))
        m = _CRASH_PROCESS_RE.search(entry.message)
        if m and m.group(1) == self.package:
            self.pids.add(int(m.group(2)))

    def matches(self, entry: LogcatEntry) -> bool:
        if not self.package and not self.pids:
            return True
        if entry.pid in self.pids:
            return True
        return bool(self.package) and self.package in entry.tag


def severity_of(entry: LogcatEntry) -> str | None:
    if entry.level == "F" or (entry.tag == "AndroidRuntime" and entry.message.startswith("FATAL EXCEPTION")):
        return "F"
    if entry.level in ("W", "E"):
        return entry.level
    return None


@dataclass(frozen=True)
class ActivityMarker:
    activity: str
    timestamp: datetime


@dataclass
class Issue:
    severity: str
    timestamp: datetime
    tag: str
    message: str
    activity: str = UNKNOWN_ACTIVITY
    pid: int = 0
    adjacent_events: list[InjectionRecord] = field(default_factory=list)


def activity_at(markers: Sequence[ActivityMarker], ts: datetime) -> str:
    """Last marker at or before ``ts``; markers must be time-ordered."""
    i = bisect.bisect_right([m.timestamp for m in markers], ts)
    return markers[i - 1].activity if i else UNKNOWN_ACTIVITY


def extract_issues(
    timeline: Sequence[TimelineItem],
    cfg: AnalysisConfig | None = None,
    markers: Sequence[ActivityMarker] = (),
) -> list[Issue]:
    cfg = cfg or AnalysisConfig()
    markers = sorted(markers, key=lambda m: m.timestamp)
    matcher = AppMatcher(cfg.package, cfg.pids)
    injected = [item for item in timeline if item.is_injected]
    inj_times = [item.timestamp for item in injected]
    before = timedelta(seconds=cfg.window_before_secs)
    after = timedelta(seconds=cfg.window_after_secs)

    issues = []
    for item in timeline:
        if item.is_injected:
            continue
        entry = item.source
        matcher.observe(entry)
        sev = severity_of(entry)
        if sev is None or not matcher.matches(entry):
            continue
        lo = bisect.bisect_left(inj_times, item.timestamp - before)
        hi = bisect.bisect_right(inj_times, item.timestamp + after)
        issues.append(
            Issue(
                severity=sev,
                timestamp=item.timestamp,
                tag=entry.tag,
                message=entry.message,
                activity=activity_at(markers, item.timestamp),
                pid=entry.pid,
                adjacent_events=[injected[i].source for i in range(lo, hi)],
            )
        )
    return issues


def group_by_activity(issues: Iterable[Issue]) -> dict[str, dict[str, list[Issue]]]:
    groups: dict[str, dict[str, list[Issue]]] = {}
    for issue in issues:
        groups.setdefault(issue.activity, {}).setdefault(issue.severity, []).append(issue)
    return {act: {s: by_sev[s] for s in SEVERITIES if s in by_sev} for act, by_sev in groups.items()}


def summarize(issues: Sequence[Issue]) -> dict:
    """Headline counts: issues per severity, and issues with each adjacent event kind."""
    by_sev = {s: 0 for s in SEVERITIES}
    by_kind = {k.value: 0 for k in EventKind}
    for issue in issues:
        by_sev[issue.severity] += 1
        for kind in {r.event.kind for r in issue.adjacent_events}:
            by_kind[kind.value] += 1
    return {"total": len(issues), "by_severity": by_sev, "by_adjacent_kind": by_kind}


@dataclass
class Analysis:
    issues: list[Issue] = field(default_factory=list)
    package: str | None = None
    window_before_secs: float = 10.0
    window_after_secs: float = 2.0


# analysis.json / report.json schema


def record_to_dict(r: InjectionRecord) -> dict:
    ev = r.event
    return {
        "timestamp": format_seconds(r.timestamp),
        "kind": ev.kind.value,
        "index": ev.index,
        "interval_secs": ev.interval_secs,
        "value": ev.value,
    }


def record_from_dict(d: dict) -> InjectionRecord:
    ev = ContextualEvent(EventKind(d["kind"]), d["index"], d["interval_secs"], d["value"])
    return InjectionRecord(parse_stamp(d["timestamp"]), ev)


def issue_to_dict(issue: Issue) -> dict:
    return {
        "severity": issue.severity,
        "timestamp": format_millis(issue.timestamp),
        "tag": issue.tag,
        "message": issue.message,
        "activity": issue.activity,
        "pid": issue.pid,
        "adjacent_events": [record_to_dict(r) for r in issue.adjacent_events],
    }


def issue_from_dict(d: dict) -> Issue:
    return Issue(
        severity=d["severity"],
        timestamp=parse_stamp(d["timestamp"]),
        tag=d["tag"],
        message=d["message"],
        activity=d["activity"],
        pid=d.get("pid", 0),
        adjacent_events=[record_from_dict(r) for r in d["adjacent_events"]],
    )


def analysis_to_dict(a: Analysis) -> dict:
    return {
        "package": a.package,
        "window_before_secs": a.window_before_secs,
        "window_after_secs": a.window_after_secs,
        "summary": summarize(a.issues),
        "issues": [issue_to_dict(i) for i in a.issues],
    }


def analysis_from_dict(d: dict) -> Analysis:
    return Analysis(
        issues=[issue_from_dict(i) for i in d.get("issues", [])],
        package=d.get("package"),
        window_before_secs=d.get("window_before_secs", 10.0),
        window_after_secs=d.get("window_after_secs", 2.0),
    )


def markers_from_run(run: dict) -> list[ActivityMarker]:
    return [ActivityMarker(m["activity"], parse_stamp(m["timestamp"])) for m in run.get("activity_markers", [])]


def analyze(
    logcat: Sequence[LogcatEntry],
    injected: Sequence[InjectionRecord],
    markers: Sequence[ActivityMarker],
    cfg: AnalysisConfig,
) -> Analysis:
    timeline = merge_timeline(logcat, injected)
    markers = [ActivityMarker(m.activity, normalize_stamp(m.timestamp)) for m in markers]
    return Analysis(
        issues=extract_issues(timeline, cfg, markers),
        package=cfg.package,
        window_before_secs=cfg.window_before_secs,
        window_after_secs=cfg.window_after_secs,
    )
