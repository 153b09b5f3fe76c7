"""``gazetrace`` command line.

Exit codes:

==  ==========================================
0   success
1   unexpected internal error
2   bad command-line usage
3   input file not found
4   input could not be parsed
5   empty session (no valid gaze samples)
6   output path not writable
7   invalid configuration
8   infeasible synthetic spec
9   partial failure (some levels or files failed)
==  ==========================================
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, kernels
from .config import CONFIG_ENV_VAR, ConfigError, build_config, load_config_file
from .detect import debug_rows
from .ingest import EmptySessionError, IngestError, ParseError
from .pipeline import analyze_file
from .report import FORMATS, emit_reports, report_to_json
from .synth import SynthSpecError, demo_plan, write_synthetic

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_PARSE = 4
EXIT_EMPTY = 5
EXIT_OUTPUT = 6
EXIT_CONFIG = 7
EXIT_SYNTH = 8
EXIT_PARTIAL = 9

log = logging.getLogger("gazetrace")

# flag dest -> (section, key)
_OVERRIDES = {
    "width": ("screen", "width"),
    "height": ("screen", "height"),
    "y_origin": ("screen", "y_origin"),
    "tolerance": ("screen", "aoi_tolerance"),
    "min_aoi_size": ("screen", "min_aoi_size"),
    "coords": ("ingest", "coords"),
    "v_basic": ("detect", "v_basic"),
    "v_advanced": ("detect", "v_advanced"),
    "spatial_threshold": ("detect", "spatial_threshold"),
    "min_duration": ("detect", "min_duration"),
    "min_cluster_size": ("detect", "min_cluster_size"),
    "min_latency": ("match", "min_latency"),
    "max_latency": ("match", "max_latency"),
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazetrace", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    p.add_argument("--quiet", action="store_true", help="only errors on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyse session logs and write reports")
    a.add_argument("inputs", nargs="+", type=Path, help="session CSV files or directories of them")
    a.add_argument("--out", type=Path, default=Path("gazetrace-out"), help="output directory")
    a.add_argument("--aoi", type=Path, help="sidecar AOI file (name x y w h [role] per line)")
    a.add_argument("--config", type=Path, help=f"key=value config file (default: ${CONFIG_ENV_VAR})")
    a.add_argument("--format", default=",".join(FORMATS),
                   help="comma-separated subset of: " + ", ".join(FORMATS))
    a.add_argument("--student-id", help="student id for a single input file (default: file stem)")
    a.add_argument("--debug-dump", action="store_true",
                   help="also write per-sample velocity/label/cluster rows to debug/samples_L<k>.csv")
    a.add_argument("--stdout", action="store_true",
                   help="print the structured report to stdout instead of writing files")
    a.add_argument("--backend", choices=kernels.BACKENDS, help="kernel backend (default: %s)" % kernels.BACKEND)
    g = a.add_argument_group("overrides")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--y-origin", choices=("top", "bottom"))
    g.add_argument("--coords", choices=("auto", "normalized", "pixel"))
    g.add_argument("--tolerance", type=float, help="AOI tolerance in px")
    g.add_argument("--min-aoi-size", type=float)
    g.add_argument("--v-basic", type=float, help="I-VT threshold in px/s")
    g.add_argument("--v-advanced", type=float, help="clustering velocity threshold in px/s")
    g.add_argument("--spatial-threshold", type=float, help="cluster radius in px")
    g.add_argument("--min-duration", type=float, help="minimum fixation duration in ms")
    g.add_argument("--min-cluster-size", type=int)
    g.add_argument("--min-latency", type=float, help="click latency window start in ms")
    g.add_argument("--max-latency", type=float, help="click latency window end in ms")

    s = sub.add_parser("synth", help="generate a synthetic session with ground truth")
    s.add_argument("--spec", type=Path, help="JSON session plan (default: built-in demo)")
    s.add_argument("--out", type=Path, required=True, help="output CSV path")
    s.add_argument("--seed", type=int, help="override the plan's seed")

    v = sub.add_parser("validate-config", help="check a config file and print the effective settings")
    v.add_argument("path", type=Path, nargs="?")

    sub.add_parser("version", help="print version and kernel backend")
    return p


def _config_layers(args):
    path = getattr(args, "config", None) or getattr(args, "path", None)
    if path is None and os.environ.get(CONFIG_ENV_VAR):
        path = Path(os.environ[CONFIG_ENV_VAR])
    layers = []
    if path is not None:
        if not path.is_file():
            raise CliError(f"config file not found: {path}", EXIT_MISSING)
        try:
            layers.append(load_config_file(path))
        except ConfigError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None
    flags: dict = {}
    for dest, (section, key) in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            flags.setdefault(section, {})[key] = value
    layers.append(flags)
    try:
        return build_config(*layers)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None


def _collect_inputs(paths):
    files = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in (".csv", ".tsv", ".txt") and q.is_file()))
        elif p.is_file():
            files.append(p)
        else:
            raise CliError(f"input not found: {p}", EXIT_MISSING)
    if not files:
        raise CliError("no session files found in the given inputs", EXIT_MISSING)
    return files


def _analyze_one(path, config, args, out_dir, student_id, formats):
    try:
        result = analyze_file(path, config, args.aoi, student_id, backend=args.backend)
    except FileNotFoundError as exc:
        raise CliError(f"{exc.filename}: not found", EXIT_MISSING) from None
    except EmptySessionError as exc:
        raise CliError(f"empty session: {exc}", EXIT_EMPTY) from None
    except (ParseError, IngestError, UnicodeDecodeError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None
    report = result.report
    for lvl, msg in report.errors:
        log.warning("%s: level %s skipped: %s", path, lvl, msg)
    if args.stdout:
        sys.stdout.write(report_to_json(report))
    else:
        try:
            emit_reports(report, out_dir, formats)
            if args.debug_dump:
                _write_debug(result, out_dir)
        except OSError as exc:
            raise CliError(f"{exc.filename or out_dir}: {exc.strerror or exc}", EXIT_OUTPUT) from None
    return report


def _write_debug(result, out_dir):
    import csv

    for run in result.runs:
        path = Path(out_dir) / "debug" / f"samples_L{run.level}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(debug_rows(run.session.samples, run.detection))


def cmd_analyze(args) -> int:
    config = _config_layers(args)
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise CliError(f"unknown format(s): {', '.join(bad)}", EXIT_USAGE)
    files = _collect_inputs(args.inputs)
    batch = len(files) > 1 or any(p.is_dir() for p in args.inputs)
    if not batch:
        report = _analyze_one(files[0], config, args, args.out, args.student_id, formats)
        return EXIT_PARTIAL if report.errors else EXIT_OK

    index, failures = [], []
    for path in files:
        sid = path.stem
        try:
            report = _analyze_one(path, config, args, args.out / sid, sid, formats)
        except CliError as exc:
            log.error("%s", exc)
            failures.append(exc.code)
            index.append({"student_id": sid, "source": str(path), "status": "failed", "error": str(exc)})
            continue
        index.append({
            "student_id": sid,
            "source": str(path),
            "status": "partial" if report.errors else "ok",
            "levels": [lv.level for lv in report.levels],
            "urgency": report.plan.urgency if report.plan else None,
            "max_risk_score": max((lv.risk.display_score for lv in report.levels), default=None),
        })
    if not args.stdout:
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"{args.out}: {exc.strerror}", EXIT_OUTPUT) from None
    if failures and len(failures) == len(files):
        raise CliError(f"all {len(files)} sessions failed", failures[0])
    if failures or any(e["status"] == "partial" for e in index):
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec is not None:
        if not args.spec.is_file():
            raise CliError(f"spec file not found: {args.spec}", EXIT_MISSING)
        try:
            plan = json.loads(args.spec.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.spec}: invalid JSON: {exc}", EXIT_PARSE) from None
    else:
        plan = demo_plan()
    if args.seed is not None:
        plan = {**plan, "seed": args.seed}
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        csv_path, truth_path = write_synthetic(plan, args.out)
    except SynthSpecError as exc:
        raise CliError(f"infeasible spec: {exc}", EXIT_SYNTH) from None
    except OSError as exc:
        raise CliError(f"{args.out}: {exc.strerror}", EXIT_OUTPUT) from None
    log.info("wrote %s and %s", csv_path, truth_path)
    return EXIT_OK


def cmd_validate_config(args) -> int:
    config = _config_layers(args)
    sys.stdout.write(json.dumps(config.echo(), indent=2) + "\n")
    return EXIT_OK


def cmd_version(args) -> int:
    sys.stdout.write(f"gazetrace {__version__} (kernels: {kernels.BACKEND})\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="gazetrace: %(levelname)s: %(message)s", stream=sys.stderr)
    handler = {
        "analyze": cmd_analyze,
        "synth": cmd_synth,
        "validate-config": cmd_validate_config,
        "version": cmd_version,
    }[args.command]
    try:
        return handler(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except Exception as exc:  # pragma: no cover
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
