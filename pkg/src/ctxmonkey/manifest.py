"""App metadata from ``aapt dump badging`` / ``aapt dump xmltree`` text."""

from __future__ import annotations

import re
import subprocess
from dataclasses import dataclass, field

from .errors import ParseError
from .scenario import EventKind

NETWORK_PERMISSIONS = frozenset(
    {
        "android.permission.INTERNET",
        "android.permission.ACCESS_NETWORK_STATE",
        "android.permission.ACCESS_WIFI_STATE",
        "android.permission.CHANGE_NETWORK_STATE",
    }
)
NETWORK_KINDS = frozenset(
    {EventKind.NetworkStatus, EventKind.NetworkDelay, EventKind.GsmProfile, EventKind.AirplaneMode}
)
ALWAYS_KINDS = frozenset({EventKind.UserRotation, EventKind.KeyPress})

_PACKAGE_RE = re.compile(r"^package:\s+name='([^']*)'(.*)$")
_VERSION_RE = re.compile(r"versionName='([^']*)'")
# both `uses-permission: name='X'` and the older `uses-permission:'X'`
_PERMISSION_RE = re.compile(r"^uses-permission(?:-sdk-23)?:\s*(?:name=)?'([^']+)'")
_LAUNCHABLE_RE = re.compile(r"^launchable-activity:\s+name='([^']+)'")
_ELEMENT_RE = re.compile(r"^(\s*)E:\s+(\S+)")
_NAME_ATTR_RE = re.compile(r'^(\s*)A:\s+android:name(?:\([^)]*\))?="([^"]*)"')


@dataclass(frozen=True)
class AppMetadata:
    package_id: str
    version_name: str = ""
    permissions: frozenset[str] = field(default_factory=frozenset)
    activities: tuple[str, ...] = ()


def _qualify(name: str, package: str) -> str:
    if name.startswith("."):
        return package + name
    if "." not in name:
        return f"{package}.{name}"
    return name


def parse_badging(text: str) -> AppMetadata:
    """Parse concatenated badging and manifest-xmltree dumps for one app.

    The launchable activity comes first in ``activities``; the rest follow in
    manifest order with duplicates dropped.
    """
    package = None
    version = ""
    permissions: set[str] = set()
    launchable: list[str] = []
    declared: list[str] = []
    pending_depth: int | None = None  # indent of the `E: activity` whose name is pending

    for raw in text.splitlines():
        line = raw.strip()
        if package is None:
            m = _PACKAGE_RE.match(line)
            if m:
                package = m.group(1)
                v = _VERSION_RE.search(m.group(2))
                version = v.group(1) if v else ""
                continue
        m = _PERMISSION_RE.match(line)
        if m:
            permissions.add(m.group(1))
            continue
        m = _LAUNCHABLE_RE.match(line)
        if m:
            launchable.append(m.group(1))
            continue

        m = _ELEMENT_RE.match(raw)
        if m:
            # attributes precede children, so any new element ends the activity's own attributes
            pending_depth = len(m.group(1)) if m.group(2) == "activity" else None
            continue
        if pending_depth is not None:
            m = _NAME_ATTR_RE.match(raw)
            if m and len(m.group(1)) > pending_depth:
                declared.append(m.group(2))
                pending_depth = None

    if not package:
        raise ParseError("no `package: name='...'` line found")

    activities: list[str] = []
    for name in launchable + declared:
        if not name:
            continue
        name = _qualify(name, package)
        if name not in activities:
            activities.append(name)
    return AppMetadata(package, version, frozenset(permissions), tuple(activities))


def applicable_event_kinds(m: AppMetadata) -> frozenset[EventKind]:
    if m.permissions & NETWORK_PERMISSIONS:
        return ALWAYS_KINDS | NETWORK_KINDS
    return ALWAYS_KINDS


def dump_apk(aapt: str, apk_path: str) -> str:
    """Run aapt and return badging + manifest xmltree output concatenated."""
    out = []
    for args in (["dump", "badging", apk_path], ["dump", "xmltree", apk_path, "AndroidManifest.xml"]):
        try:
            proc = subprocess.run([aapt, *args], capture_output=True, text=True, timeout=120)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ParseError(f"could not run {aapt}: {exc}") from exc
        if proc.returncode != 0:
            raise ParseError(f"{aapt} {' '.join(args)} failed: {proc.stderr.strip()}")
        out.append(proc.stdout)
    return "\n".join(out)
