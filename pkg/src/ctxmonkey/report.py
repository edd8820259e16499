"""Text, JSON and static HTML renderings of an analysis."""

from __future__ import annotations

import html
import json
from dataclasses import dataclass

from .analysis import (
    SEVERITIES,
    SEVERITY_NAMES,
    Analysis,
    Issue,
    analysis_from_dict,
    analysis_to_dict,
    group_by_activity,
)
from .logparse import format_millis


@dataclass(frozen=True)
class ReportFilter:
    activities: frozenset[str] | None = None
    severities: frozenset[str] | None = None

    def __post_init__(self):
        if self.severities is not None and not set(self.severities) <= set(SEVERITIES):
            raise ValueError(f"severities must be a subset of {SEVERITIES}")

    def accepts(self, issue: Issue) -> bool:
        if self.activities and issue.activity not in self.activities:
            return False
        return not self.severities or issue.severity in self.severities


def apply_filter(analysis: Analysis, flt: ReportFilter | None) -> Analysis:
    flt = flt or ReportFilter()
    return Analysis(
        issues=[i for i in analysis.issues if flt.accepts(i)],
        package=analysis.package,
        window_before_secs=analysis.window_before_secs,
        window_after_secs=analysis.window_after_secs,
    )


def _issue_line(issue: Issue) -> str:
    return f"[{format_millis(issue.timestamp)}] {issue.severity} {issue.tag}: {issue.message}"


def render_text(analysis: Analysis, flt: ReportFilter | None = None) -> str:
    a = apply_filter(analysis, flt)
    lines = [f"Issue report for {a.package or 'app'}: {len(a.issues)} issue(s)"]
    if not a.issues:
        lines.append("no issues")
        return "\n".join(lines) + "\n"
    for activity, by_sev in group_by_activity(a.issues).items():
        lines.append("")
        lines.append(f"== {activity} ==")
        for sev, issues in by_sev.items():
            lines.append(f"  -- {SEVERITY_NAMES[sev]} ({len(issues)}) --")
            for issue in issues:
                lines.append("    " + _issue_line(issue))
                for rec in issue.adjacent_events:
                    lines.append("      <- " + rec.format())
    return "\n".join(lines) + "\n"


def render_json(analysis: Analysis, flt: ReportFilter | None = None) -> str:
    return json.dumps(analysis_to_dict(apply_filter(analysis, flt)), indent=2, sort_keys=True) + "\n"


def parse_report_json(text: str) -> Analysis:
    return analysis_from_dict(json.loads(text))


_CSS = """
body { font-family: sans-serif; margin: 2em; }
details.activity { margin-bottom: 1em; border: 1px solid #ccc; padding: 0.5em; }
summary { font-weight: bold; cursor: pointer; }
.badge { display: inline-block; padding: 0 0.5em; margin-left: 0.4em; border-radius: 0.6em; color: #fff; }
.sev-W { background: #c90; } .sev-E { background: #c33; } .sev-F { background: #603; }
li.issue { font-family: monospace; margin: 0.3em 0; }
ul.adjacent { color: #555; }
"""


def render_html(analysis: Analysis, flt: ReportFilter | None = None) -> str:
    a = apply_filter(analysis, flt)
    esc = html.escape
    title = f"Issue report for {a.package or 'app'}"
    out = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{esc(title)}</title>",
        f"<style>{_CSS}</style>",
        "</head>",
        "<body>",
        f"<h1>{esc(title)}</h1>",
        f'<p class="total" data-count="{len(a.issues)}">{len(a.issues)} issue(s)</p>',
    ]
    if not a.issues:
        out.append('<p class="empty">no issues</p>')
    for activity, by_sev in group_by_activity(a.issues).items():
        badges = "".join(
            f'<span class="badge sev-{s}" data-severity="{s}" data-count="{len(v)}">{s} {len(v)}</span>'
            for s, v in by_sev.items()
        )
        out.append(f'<details class="activity" data-activity="{esc(activity)}" open>')
        out.append(f"<summary>{esc(activity)}{badges}</summary>")
        for sev, issues in by_sev.items():
            out.append(f'<h3 class="severity">{SEVERITY_NAMES[sev]}</h3>')
            out.append("<ul>")
            for issue in issues:
                out.append(f'<li class="issue sev-{sev}">{esc(_issue_line(issue))}')
                if issue.adjacent_events:
                    out.append('<ul class="adjacent">')
                    out.extend(f"<li>{esc(rec.format())}</li>" for rec in issue.adjacent_events)
                    out.append("</ul>")
                out.append("</li>")
            out.append("</ul>")
        out.append("</details>")
    out += ["</body>", "</html>"]
    return "\n".join(out) + "\n"
