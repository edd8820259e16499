"""uiautomator hierarchy parsing and scroll-to-fixpoint element collection."""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import ParseError

if TYPE_CHECKING:
    from .device.base import DeviceBackend

log = logging.getLogger(__name__)

DEFAULT_MAX_SCROLLS = 20

_BOUNDS_RE = re.compile(r"^\[(\d+),(\d+)\]\[(\d+),(\d+)\]$")


@dataclass(frozen=True)
class Bounds:
    left: int
    top: int
    right: int
    bottom: int

    @property
    def height(self) -> int:
        return self.bottom - self.top

    @property
    def center(self) -> tuple[int, int]:
        return (self.left + self.right) // 2, (self.top + self.bottom) // 2


@dataclass(frozen=True)
class UiElement:
    class_name: str
    resource_id: str
    bounds: Bounds
    editable: bool
    text: str = ""

    @property
    def identity(self) -> tuple[str, str, str, int]:
        # absolute top/bottom move while scrolling, height does not
        return (self.class_name, self.resource_id, self.text, self.bounds.height)


@dataclass
class UiSnapshot:
    activity: str
    elements: list[UiElement] = field(default_factory=list)
    truncated: bool = False  # max_scrolls hit before a fixpoint
    # dump number each element was first seen in; bounds are only comparable within a page
    pages: list[int] = field(default_factory=list)

    def page_of(self, i: int) -> int:
        return self.pages[i] if i < len(self.pages) else 0


def parse_bounds(s: str) -> Bounds:
    m = _BOUNDS_RE.match(s.strip())
    if not m:
        raise ParseError(f"bad bounds {s!r}")
    left, top, right, bottom = map(int, m.groups())
    if left > right or top > bottom:
        raise ParseError(f"inverted bounds {s!r}")
    return Bounds(left, top, right, bottom)


def is_editable(attrs: dict[str, str]) -> bool:
    if "EditText" in attrs.get("class", ""):
        return True
    return attrs.get("editable") == "true" or attrs.get("input-type", "0") not in ("", "0")


def parse_ui_dump(xml: str, activity: str) -> UiSnapshot:
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise ParseError(f"malformed hierarchy XML: {exc}") from None
    elements = []
    for node in root.iter("node"):
        attrs = node.attrib
        elements.append(
            UiElement(
                class_name=attrs.get("class", ""),
                resource_id=attrs.get("resource-id", ""),
                bounds=parse_bounds(attrs.get("bounds", "")),
                editable=is_editable(attrs),
                text=attrs.get("text", ""),
            )
        )
    return UiSnapshot(activity, elements)


def collect_all_elements(device: DeviceBackend, activity: str, max_scrolls: int = DEFAULT_MAX_SCROLLS) -> UiSnapshot:
    """Dump, merge and scroll until a dump yields no unseen element.

    Elements keep first-seen order. Gives up after ``max_scrolls`` scrolls and
    marks the snapshot truncated (endless feeds never reach a fixpoint).
    """
    merged = UiSnapshot(activity)
    seen: set[tuple] = set()
    scrolls = 0
    while True:
        snap = parse_ui_dump(device.ui_dump(), activity)
        fresh = 0
        for el in snap.elements:
            if el.identity not in seen:
                seen.add(el.identity)
                merged.elements.append(el)
                merged.pages.append(scrolls)
                fresh += 1
        if fresh == 0:
            return merged
        if scrolls >= max_scrolls:
            log.warning("%s: no fixpoint after %d scrolls, snapshot truncated", activity, scrolls)
            merged.truncated = True
            return merged
        device.scroll_down()
        scrolls += 1


def text_fields(s: UiSnapshot) -> list[UiElement]:
    """Editable elements in reading order: page, then top, left, document order."""
    indexed = [(s.page_of(i), el.bounds.top, el.bounds.left, i, el) for i, el in enumerate(s.elements) if el.editable]
    indexed.sort(key=lambda t: t[:4])
    return [t[4] for t in indexed]
