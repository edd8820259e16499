"""Test-run orchestration.

A run owns one device backend. Per activity it replays the filtered scenario
(each kind on its own timeline, reset at every activity start) while a text
fuzzer walks the input fields and a reader thread tees logcat to disk. The
reader doubles as the fatal watchdog: a crash line from the app sets the
shared cancellation event and every worker stops at its next wait.

Output directory::

    executor.log   one injected event per line, flushed per record
    logcat.log     raw threadtime lines, flushed per line
    run.json       markers, crash, fuzz progress, config echo, scenario hash
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import string
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, ContextManager

from .analysis import ActivityMarker, AppMatcher, severity_of
from .device.base import DeviceBackend, LogcatStream
from .errors import ConfigError, DeviceError, InstallError, ParseError
from .logparse import (
    InjectionRecord,
    LogcatEntry,
    format_millis,
    normalize_stamp,
    parse_logcat_line,
    write_executor_log,
)
from .manifest import AppMetadata, applicable_event_kinds
from .prng import XorShift64Star, derive_seed
from .scenario import ContextualEvent, Scenario, filter_scenario
from .uimodel import UiElement, UiSnapshot, parse_ui_dump, text_fields

log = logging.getLogger(__name__)

EXECUTOR_LOG = "executor.log"
LOGCAT_LOG = "logcat.log"
RUN_JSON = "run.json"
FUZZ_ALPHABET = string.ascii_letters + string.digits
WORKER_JOIN_TIMEOUT = 10.0

__all__ = [
    "RunConfig",
    "RunArtifacts",
    "FuzzProgress",
    "run",
    "fuzz_text_fields",
    "write_executor_log",
]


@dataclass
class RunConfig:
    output_dir: Path
    mode: str = "all"  # "all" | "guided"
    activities: tuple[str, ...] = ()  # the guided list
    text_fuzz: bool = True
    text_seed: int = 0
    per_activity_duration_secs: int | None = None  # None: scenario duration
    fatal_stop: bool = True
    max_scrolls: int = 20

    def validate(self) -> None:
        if self.mode not in ("all", "guided"):
            raise ConfigError(f"unknown mode {self.mode!r}", key="mode")
        if self.mode == "guided" and not self.activities:
            raise ConfigError("guided mode needs at least one activity", key="activities")
        if self.per_activity_duration_secs is not None and self.per_activity_duration_secs < 1:
            raise ConfigError("must be a positive number of seconds", key="per_activity_duration")


@dataclass
class RunArtifacts:
    output_dir: Path
    activity_markers: list[ActivityMarker] = field(default_factory=list)
    crash: tuple[str, datetime] | None = None
    text_fuzz_progress: dict[str, int] = field(default_factory=dict)
    text_fuzz_warnings: int = 0
    records: list[InjectionRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def executor_log_path(self) -> Path:
        return self.output_dir / EXECUTOR_LOG

    @property
    def logcat_log_path(self) -> Path:
        return self.output_dir / LOGCAT_LOG

    @property
    def run_json_path(self) -> Path:
        return self.output_dir / RUN_JSON


class _ArtifactWriter:
    """Single writer for both logs; every line is flushed as soon as it is written."""

    def __init__(self, out: Path):
        self._lock = threading.Lock()
        self._exec = open(out / EXECUTOR_LOG, "w", encoding="utf-8", newline="\n")
        self._cat = open(out / LOGCAT_LOG, "w", encoding="utf-8", newline="\n")

    def record(self, rec: InjectionRecord) -> None:
        with self._lock:
            self._exec.write(write_executor_log([rec]))
            self._exec.flush()
            os.fsync(self._exec.fileno())

    def logcat(self, line: str) -> None:
        with self._lock:
            self._cat.write(line + "\n")
            self._cat.flush()

    def close(self) -> None:
        with self._lock:
            self._exec.close()
            self._cat.close()


# text fuzzing


@dataclass
class FuzzProgress:
    """Fields already typed into, keyed by ``field_key``, in walk order."""

    typed: dict[str, str] = field(default_factory=dict)
    warnings: int = 0

    @property
    def completed(self) -> int:
        return len(self.typed)


def field_key(el: UiElement, ordinal: int) -> str:
    # resource ids survive rotation; id-less fields fall back to their position among fields
    return el.resource_id or f"{el.class_name}#{ordinal}"


def random_text(rng: XorShift64Star) -> str:
    n = rng.randint(1, 32)
    return "".join(rng.choice(FUZZ_ALPHABET) for _ in range(n))


def _layout_signature(s: UiSnapshot) -> tuple:
    return tuple((e.class_name, e.resource_id, e.bounds) for e in s.elements)


def fuzz_text_fields(
    device: DeviceBackend,
    snapshot_provider: Callable[[], UiSnapshot],
    seed: int,
    activity: str = "",
    cancel: threading.Event | None = None,
    lock: ContextManager | None = None,
    progress: FuzzProgress | None = None,
    max_scrolls: int = 20,
) -> FuzzProgress:
    """Type a seeded random string into every text field of the activity once.

    The hierarchy is re-read before each field, so after a rotation (or any
    other refresh) the walk resumes at the first field not yet typed into.
    Once the visible fields are done the screen is scrolled until scrolling
    stops changing the layout.
    """
    rng = XorShift64Star(derive_seed(seed, activity))
    progress = progress or FuzzProgress()
    cancel = cancel or threading.Event()
    lock = lock or contextlib.nullcontext()
    planned: list[str] = []
    scrolled_from: tuple | None = None
    scrolls = 0

    while not cancel.is_set():
        with lock:
            snap = snapshot_provider()
            sig = _layout_signature(snap)
            if scrolled_from is not None:
                if sig == scrolled_from:
                    break  # scrolling made no progress: bottom reached
                scrolled_from = None
            fields = text_fields(snap)
            keys = [field_key(f, i) for i, f in enumerate(fields)]
            missing = [k for k in planned if k not in keys and k not in progress.typed]
            if missing:
                log.warning("%s: %d planned field(s) vanished after refresh", activity, len(missing))
                progress.warnings += len(missing)
            pending = [(k, f) for k, f in zip(keys, fields) if k not in progress.typed]
            if pending:
                key, el = pending[0]
                text = random_text(rng)
                device.focus_at(*el.bounds.center)
                device.input_text(text)
                progress.typed[key] = text
                planned = [k for k, _ in pending[1:]]
                continue
            planned = []
            if scrolls >= max_scrolls:
                break
            device.scroll_down()
            scrolls += 1
            scrolled_from = sig
    return progress


# injection


def _timeline(scenario: Scenario, dwell: int) -> list[tuple[int, ContextualEvent]]:
    """(offset, event) for every event starting inside the dwell window.

    Each kind runs on its own clock from offset 0; same-offset events are
    ordered by kind then index.
    """
    out = []
    for kind, seq in scenario.sequences.items():
        offset = 0
        for ev in seq:
            if offset >= dwell:
                break
            out.append((offset, kind.ordinal, ev.index, ev))
            offset += ev.interval_secs
    out.sort(key=lambda t: t[:3])
    return [(t[0], t[3]) for t in out]


def _inject(
    device: DeviceBackend,
    scenario: Scenario,
    dwell: int,
    cancel: threading.Event,
    on_record: Callable[[InjectionRecord], None],
    lock: ContextManager,
) -> None:
    start = device.now()

    def wait_until(offset: float) -> bool:
        elapsed = (device.now() - start).total_seconds()
        return device.sleep(offset - elapsed, cancel)

    for offset, ev in _timeline(scenario, dwell):
        # also a barrier: the watchdog has seen every line caused so far
        if wait_until(offset):
            return
        with lock:
            device.apply_event(ev)
            ts = normalize_stamp(device.now(), "s")
        on_record(InjectionRecord(ts, ev))
    wait_until(dwell)


# the run


class _Watchdog:
    def __init__(self, package: str, cancel: threading.Event, fatal_stop: bool):
        self.matcher = AppMatcher(package)
        self.cancel = cancel
        self.fatal_stop = fatal_stop
        self.activity: str | None = None
        self.crash: tuple[str, datetime] | None = None
        self.parse_errors = 0

    def check(self, entry: LogcatEntry) -> None:
        self.matcher.observe(entry)
        if self.crash is None and severity_of(entry) == "F" and self.matcher.matches(entry):
            self.crash = (self.activity or "unknown", entry.timestamp)
            log.warning("fatal in %s at %s: %s", self.crash[0], format_millis(entry.timestamp), entry.message)
            if self.fatal_stop:
                self.cancel.set()


def _read_logcat(stream: LogcatStream, writer: _ArtifactWriter, watchdog: _Watchdog) -> None:
    for line in stream:
        writer.logcat(line)
        try:
            entry = parse_logcat_line(line)
        except ParseError:
            watchdog.parse_errors += 1
            continue
        if entry is not None:
            watchdog.check(entry)
    if stream.error:
        log.error("logcat stream ended: %s", stream.error)


def resolve_activities(metadata: AppMetadata, config: RunConfig) -> list[str]:
    if config.mode == "guided":
        return list(config.activities)
    if not metadata.activities:
        raise ConfigError(f"{metadata.package_id} declares no activities", key="activities")
    return list(metadata.activities)


def _run_json(art: RunArtifacts, metadata: AppMetadata, scenario: Scenario, config: RunConfig, status: str) -> dict:
    cfg = asdict(config)
    cfg["output_dir"] = str(config.output_dir)
    cfg["activities"] = list(config.activities)
    return {
        "status": status,
        "package": metadata.package_id,
        "activity_markers": [
            {"activity": m.activity, "timestamp": format_millis(m.timestamp)} for m in art.activity_markers
        ],
        "crash": None if art.crash is None else {"activity": art.crash[0], "timestamp": format_millis(art.crash[1])},
        "text_fuzz_progress": art.text_fuzz_progress,
        "text_fuzz_warnings": art.text_fuzz_warnings,
        "injections": len(art.records),
        "error": art.error,
        "config": cfg,
        "scenario_sha256": scenario.sha256(),
    }


def _write_json(path: Path, doc: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def run(
    device: DeviceBackend,
    metadata: AppMetadata,
    scenario: Scenario,
    config: RunConfig,
    apk_path: str | None = None,
) -> RunArtifacts:
    config.validate()
    activities = resolve_activities(metadata, config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts(out)
    pkg = metadata.package_id
    dwell = config.per_activity_duration_secs or scenario.duration_secs
    filtered = filter_scenario(scenario, applicable_event_kinds(metadata))

    cancel = threading.Event()
    ui_lock = threading.RLock()
    writer = _ArtifactWriter(out)
    watchdog = _Watchdog(pkg, cancel, config.fatal_stop)
    stream: LogcatStream | None = None
    reader: threading.Thread | None = None
    _write_json(art.run_json_path, _run_json(art, metadata, scenario, config, "running"))

    def on_record(rec: InjectionRecord) -> None:
        art.records.append(rec)
        writer.record(rec)

    try:
        if apk_path:
            device.install(apk_path, pkg)
        elif not device.is_installed(pkg):
            raise InstallError(f"{pkg} is not installed and no apk was given")

        device.logcat_clear()
        stream = device.logcat_stream()
        reader = threading.Thread(target=_read_logcat, args=(stream, writer, watchdog), name="logcat-reader", daemon=True)
        reader.start()

        for activity in activities:
            if cancel.is_set():
                break
            watchdog.activity = activity
            art.activity_markers.append(ActivityMarker(activity, normalize_stamp(device.now())))
            device.launch_activity(pkg, activity)
            fuzzer = None
            fuzz_result: dict[str, FuzzProgress] = {}
            if config.text_fuzz:
                fuzzer = threading.Thread(
                    target=_fuzz_worker,
                    args=(device, activity, config, cancel, ui_lock, fuzz_result),
                    name=f"fuzz-{activity}",
                    daemon=True,
                )
                fuzzer.start()
            try:
                _inject(device, filtered, dwell, cancel, on_record, ui_lock)
            finally:
                if fuzzer is not None:
                    fuzzer.join(WORKER_JOIN_TIMEOUT)
                    progress = fuzz_result.get("progress", FuzzProgress())
                    art.text_fuzz_progress[activity] = progress.completed
                    art.text_fuzz_warnings += progress.warnings
        # final barrier so lines caused by the last injection reach the watchdog
        device.sleep(0, cancel)
    except DeviceError as exc:
        art.error = str(exc)
        raise
    finally:
        cancel.set()
        if stream is not None:
            stream.close()
        if reader is not None:
            reader.join(WORKER_JOIN_TIMEOUT)
        writer.close()
        art.crash = watchdog.crash
        status = "error" if art.error else ("crashed" if art.crash else "completed")
        _write_json(art.run_json_path, _run_json(art, metadata, scenario, config, status))
    return art


def _fuzz_worker(device, activity, config, cancel, lock, result) -> None:
    progress = FuzzProgress()
    result["progress"] = progress
    try:
        fuzz_text_fields(
            device,
            lambda: parse_ui_dump(device.ui_dump(), activity),
            config.text_seed,
            activity=activity,
            cancel=cancel,
            lock=lock,
            progress=progress,
            max_scrolls=config.max_scrolls,
        )
    except (DeviceError, ParseError) as exc:
        log.warning("text fuzzing in %s stopped: %s", activity, exc)
        progress.warnings += 1
