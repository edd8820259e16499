"""Command-line entry point: ``ctxmonkey <subcommand>``.

Exit codes: 0 success, 1 usage/config/input error, 2 device error,
3 run finished with a fatal crash detected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis as an
from . import report as rp
from .config import ToolConfig, default_config, load_config
from .device.sim import SimScript, SimulatedBackend
from .errors import ConfigError, CtxMonkeyError, DeviceError
from .executor import EXECUTOR_LOG, LOGCAT_LOG, RUN_JSON, RunConfig
from .executor import run as execute
from .logparse import read_executor_log, read_logcat_log
from .manifest import AppMetadata, applicable_event_kinds, dump_apk, parse_badging
from .scenario import generate_scenario, parse_scenario_csv, write_scenario_csv
from .uimodel import parse_ui_dump

log = logging.getLogger("ctxmonkey")

EXIT_OK, EXIT_USAGE, EXIT_DEVICE, EXIT_FATAL = 0, 1, 2, 3
ANALYSIS_JSON = "analysis.json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tool_config(args) -> ToolConfig:
    return load_config(args.config) if getattr(args, "config", None) else default_config()


def _metadata(args, cfg: ToolConfig) -> AppMetadata:
    if args.badging:
        return parse_badging(Path(args.badging).read_text(encoding="utf-8"))
    if args.apk:
        return parse_badging(dump_apk(cfg.aapt, args.apk))
    raise ConfigError("one of --apk or --badging is required")


def _apply_generator_flags(args, cfg: ToolConfig) -> None:
    for flag, attr in (("seed", "seed"), ("min_interval", "min_interval"), ("max_interval", "max_interval"), ("duration", "duration")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    cfg.validate()


def cmd_generate(args) -> int:
    cfg = _tool_config(args)
    _apply_generator_flags(args, cfg)
    meta = _metadata(args, cfg)
    scenario = generate_scenario(cfg.generator_config(applicable_event_kinds(meta)))
    text = write_scenario_csv(scenario)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        log.info("wrote %d events to %s", len(scenario.events()), args.out)
    return EXIT_OK


def _backend(args, cfg: ToolConfig, meta: AppMetadata):
    if args.backend == "sim":
        script = SimScript.load(args.sim_script) if args.sim_script else SimScript()
        script.package = meta.package_id
        script.ensure_activities(meta.activities)
        return SimulatedBackend(script)
    from .device.adb import EmulatorBackend
    from .device.console import EmulatorConsole, read_token

    cfg.require_sdk()
    console = EmulatorConsole(cfg.console_host, cfg.console_port, read_token(cfg.auth_token_path))
    return EmulatorBackend(cfg.adb, console, serial=args.serial)


def cmd_run(args) -> int:
    cfg = _tool_config(args)
    _apply_generator_flags(args, cfg)
    meta = _metadata(args, cfg)
    if args.scenario:
        scenario = parse_scenario_csv(Path(args.scenario).read_text(encoding="utf-8"))
    else:
        # no user scenario: generate one from the configured seed
        scenario = generate_scenario(cfg.generator_config(applicable_event_kinds(meta)))
    if args.guided:
        mode, guided = "guided", tuple(args.guided)
    else:
        mode, guided = cfg.mode, cfg.activities
    run_cfg = RunConfig(
        output_dir=Path(args.out or cfg.output_dir),
        mode=mode,
        activities=guided,
        text_fuzz=cfg.text_fuzz and not args.no_text_fuzz,
        text_seed=cfg.text_seed if args.text_seed is None else args.text_seed,
        per_activity_duration_secs=(
            cfg.per_activity_duration if args.per_activity_duration is None else args.per_activity_duration
        ),
        fatal_stop=cfg.fatal_stop,
        max_scrolls=cfg.max_scrolls,
    )
    run_cfg.validate()
    device = _backend(args, cfg, meta)
    try:
        art = execute(device, meta, scenario, run_cfg, apk_path=args.apk)
    finally:
        device.close()
    print(f"{len(art.records)} injection(s) across {len(art.activity_markers)} activit(y/ies); artifacts in {art.output_dir}")
    if art.crash:
        print(f"FATAL detected in {art.crash[0]} at {art.crash[1].strftime('%m-%d %H:%M:%S')}")
        return EXIT_FATAL
    return EXIT_OK


def analyze_run_dir(run_dir: Path, cfg: an.AnalysisConfig | None = None) -> an.Analysis:
    run_doc = json.loads((run_dir / RUN_JSON).read_text())
    cfg = cfg or an.AnalysisConfig()
    if cfg.package is None:
        cfg.package = run_doc.get("package")
    records = read_executor_log((run_dir / EXECUTOR_LOG).read_text(encoding="utf-8"))
    entries, bad = read_logcat_log((run_dir / LOGCAT_LOG).read_text(encoding="utf-8", errors="replace"))
    if bad:
        log.warning("%d malformed logcat line(s) skipped", bad)
    return an.analyze(entries, records, an.markers_from_run(run_doc), cfg)


def cmd_analyze(args) -> int:
    cfg = _tool_config(args)
    before = cfg.window_before if args.window_before is None else args.window_before
    after = cfg.window_after if args.window_after is None else args.window_after
    run_dir = Path(args.run_dir)
    result = analyze_run_dir(run_dir, an.AnalysisConfig(before, after))
    out = run_dir / ANALYSIS_JSON
    out.write_text(json.dumps(an.analysis_to_dict(result), indent=2, sort_keys=True) + "\n")
    counts = an.summarize(result.issues)["by_severity"]
    print(f"{len(result.issues)} issue(s) (W={counts['W']} E={counts['E']} F={counts['F']}) -> {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    path = run_dir / ANALYSIS_JSON
    if path.exists():
        analysis = an.analysis_from_dict(json.loads(path.read_text()))
    else:
        analysis = analyze_run_dir(run_dir)
    severities = {s.strip() for arg in args.severity or () for s in arg.split(",") if s.strip()}
    try:
        flt = rp.ReportFilter(frozenset(args.activity) if args.activity else None, frozenset(severities) or None)
    except ValueError as exc:
        raise ConfigError(str(exc), key="--severity") from None
    render = {"text": rp.render_text, "json": rp.render_json, "html": rp.render_html}[args.format]
    text = render(analysis, flt)
    if args.out == "-" or (args.out is None and args.format == "text"):
        sys.stdout.write(text)
    else:
        out = Path(args.out) if args.out else run_dir / f"report.{args.format}"
        out.write_text(text, encoding="utf-8")
        print(out)
    return EXIT_OK


def cmd_ui_parse(args) -> int:
    snap = parse_ui_dump(Path(args.xml).read_text(encoding="utf-8"), args.activity)
    for i, el in enumerate(snap.elements):
        if args.fields_only and not el.editable:
            continue
        b = el.bounds
        mark = "*" if el.editable else " "
        print(f"{i:3d} {mark} {el.class_name:<40} {el.resource_id:<40} [{b.left},{b.top}][{b.right},{b.bottom}] {el.text!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctxmonkey", description="Contextual fuzz testing of Android apps on the emulator.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def app_source(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--apk", help="APK to install/inspect (metadata via aapt)")
        g.add_argument("--badging", help="saved aapt badging+xmltree dump")

    def generator_flags(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--min-interval", type=int)
        sp.add_argument("--max-interval", type=int)
        sp.add_argument("--duration", type=int)

    g = sub.add_parser("generate", help="generate a seeded scenario CSV")
    app_source(g)
    generator_flags(g)
    g.add_argument("--config")
    g.add_argument("--out", help="output CSV (default stdout)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run a contextual test")
    app_source(r)
    generator_flags(r)
    r.add_argument("--scenario", help="scenario CSV; generated from the seed when omitted")
    r.add_argument("--config")
    r.add_argument("--backend", choices=("real", "sim"), default="real")
    r.add_argument("--sim-script", help="SimScript JSON for --backend sim")
    r.add_argument("--serial", help="adb serial (default emulator-<console port>)")
    r.add_argument("--out", help="run directory")
    r.add_argument("--guided", action="append", metavar="ACTIVITY", help="only run these activities (repeatable)")
    r.add_argument("--no-text-fuzz", action="store_true")
    r.add_argument("--text-seed", type=int)
    r.add_argument("--per-activity-duration", type=int)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="correlate W/E/F logcat entries with injected events")
    a.add_argument("--run-dir", required=True)
    a.add_argument("--window-before", type=float)
    a.add_argument("--window-after", type=float)
    a.add_argument("--config")
    a.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("report", help="render an analysis")
    rep.add_argument("--run-dir", required=True)
    rep.add_argument("--format", choices=("text", "json", "html"), default="text")
    rep.add_argument("--activity", action="append")
    rep.add_argument("--severity", action="append", help="W, E, F (comma-separated or repeated)")
    rep.add_argument("--out", help="output file, '-' for stdout")
    rep.set_defaults(func=cmd_report)

    u = sub.add_parser("ui-parse", help="list elements of a uiautomator dump")
    u.add_argument("xml")
    u.add_argument("--activity", default="")
    u.add_argument("--fields-only", action="store_true")
    u.set_defaults(func=cmd_ui_parse)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DeviceError as exc:
        print(f"ctxmonkey {args.command}: device error: {exc}", file=sys.stderr)
        return EXIT_DEVICE
    except (CtxMonkeyError, OSError, ValueError) as exc:
        print(f"ctxmonkey {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
