"""Console interface: plan a load, generate traffic, run scripts, analyze captures.

Exit codes: 0 on success, 1 when a run or report check fails (or on
I/O problems), 2 on usage errors.  The default output directory is the
current directory unless LINELOAD_OUT_DIR is set; explicit --out and
--report paths are used as given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import engine
from .capture import (
    CaptureError,
    analyze,
    format_duration,
    read_pcap,
    report,
    report_failed,
    write_pcap,
)
from .frames import (
    FrameError,
    FrameSpec,
    MacAddress,
    frame_size,
    make_vlan_tag,
)
from .loadmath import (
    LoadConfig,
    LoadError,
    duration,
    frame_time,
    load_gap,
)
from .nsl import NslError, compile_program, generate_load_script, parse

_TAGGED_HEADER = 18  # dst + src + VLAN tag + ethertype
_UNTAGGED_HEADER = 14  # dst + src + ethertype


def _out_dir() -> Path:
    return Path(os.environ.get("LINELOAD_OUT_DIR", "."))


def _add_frame_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--load", type=float, required=True, metavar="PCT",
                     help="target load as a percentage of line rate, in (0, 100]")
    sub.add_argument("--rate", type=int, choices=(100, 1000), default=100,
                     help="line rate in Mbit/s (default 100)")
    sub.add_argument("--frames", type=int, required=True, metavar="N",
                     help="number of frames to send")
    size = sub.add_mutually_exclusive_group(required=True)
    size.add_argument("--size", type=int, metavar="BYTES",
                      help="packet size from destination MAC through payload "
                           "(no preamble/SFD/FCS), e.g. 1514")
    size.add_argument("--payload", type=int, metavar="BYTES",
                      help="payload length in bytes (0..1500)")
    sub.add_argument("--dst", default="ff:ff:ff:ff:ff:ff", metavar="MAC",
                     help="destination MAC address")
    sub.add_argument("--src", default="02:00:00:00:00:01", metavar="MAC",
                     help="source MAC address")
    sub.add_argument("--ethertype", default="0x8892", metavar="HEX",
                     help="Ethertype in hex (default 0x8892)")
    sub.add_argument("--vlan", action="store_true",
                     help="insert an 802.1Q tag (VLAN id 0 unless --vlan-id)")
    sub.add_argument("--vlan-id", type=int, default=None, metavar="VID",
                     help="802.1Q VLAN id, implies --vlan")


def _build_config(args, parser: argparse.ArgumentParser) -> LoadConfig:
    if not 0 < args.load <= 100:
        parser.error(f"--load must be in (0, 100], got {args.load}")
    if args.frames < 1:
        parser.error(f"--frames must be at least 1, got {args.frames}")
    try:
        ethertype = int(args.ethertype, 16)
    except ValueError:
        parser.error(f"--ethertype must be hex, got {args.ethertype!r}")
    vlan = None
    if args.vlan_id is not None or args.vlan:
        try:
            vlan = make_vlan_tag(args.vlan_id or 0)
        except FrameError as exc:
            parser.error(str(exc))
    header = _TAGGED_HEADER if vlan is not None else _UNTAGGED_HEADER
    if args.payload is not None:
        payload_len = args.payload
    else:
        payload_len = args.size - header
        if payload_len < 0:
            parser.error(f"--size {args.size} is below the {header}-byte frame header")
    try:
        spec = FrameSpec(
            dst=MacAddress.from_str(args.dst),
            src=MacAddress.from_str(args.src),
            payload=bytes(payload_len),
            ethertype=ethertype,
            vlan=vlan,
        )
        return LoadConfig(load=args.load / 100, rate=args.rate,
                          frames=args.frames, spec=spec)
    except (FrameError, LoadError) as exc:
        parser.error(str(exc))


def _print_plan(config: LoadConfig) -> None:
    s = config.size
    gap = load_gap(s, config.load)
    total = duration(s, config.frames, config.load, config.rate)
    per_frame = frame_time(s, config.rate)
    print(f"frame size: {s} bytes on-wire")
    print(f"interframe gap: {gap:.6g} byte-times")
    print(f"per-frame wire time: {format_duration(per_frame)}")
    print(f"expected duration: {format_duration(total)} for {config.frames} frames")


def _cmd_plan(args, parser) -> int:
    _print_plan(_build_config(args, parser))
    return 0


def _cmd_generate(args, parser) -> int:
    config = _build_config(args, parser)
    _print_plan(config)
    script = generate_load_script(config)
    if args.script:
        Path(args.script).write_text(script)
    program = compile_program(parse(script))
    result = engine.run(program, rate=config.rate)
    out_path = Path(args.out) if args.out else _out_dir() / "lineload.pcap"
    report_path = (Path(args.report) if args.report
                   else _out_dir() / "lineload-report.txt")
    try:
        write_pcap(result.events, out_path)
        summary = analyze(result.events, config.rate)
        text = report(summary, config, checks=result.checks,
                      warnings=result.warnings)
        report_path.write_text(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out_path} ({len(result.events)} frames)")
    print(f"wrote {report_path}")
    print(text, end="")
    return 1 if report_failed(text) else 0


def _cmd_run_script(args, parser) -> int:
    path = Path(args.script)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        program = compile_program(parse(text, str(path)), str(path))
    except NslError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        result = engine.run(program, rate=args.rate)
    except engine.EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if result.events and args.out:
        write_pcap(result.events, args.out)
        print(f"wrote {args.out} ({len(result.events)} frames)")
    lines = []
    if program.report:
        lines.append(f"script: {program.report}")
    for ref in program.refs:
        lines.append(f"reference: {ref}")
    if result.events:
        summary = analyze(result.events, args.rate)
        body = report(summary, None, checks=result.checks,
                      warnings=result.warnings)
    else:
        body = "\n".join(
            f"check {c.port} {c.register}: expected {c.expected!r}, "
            f"actual {c.actual!r} -> {'PASS' if c.passed else 'FAIL'}"
            for c in result.checks
        ) + ("\n" if result.checks else "no traffic generated\n")
    text_out = "\n".join(lines + [body.rstrip("\n")]) + "\n"
    if args.report:
        Path(args.report).write_text(text_out)
    print(text_out, end="")
    return 1 if report_failed(text_out) or not result.checks_passed else 0


def _cmd_analyze(args, parser) -> int:
    try:
        capture = read_pcap(args.pcap)
    except (OSError, CaptureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        summary = analyze(capture, args.rate,
                          expected_period_ticks=args.period_ticks)
    except CaptureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(summary.to_dict(), indent=2))
    else:
        print(report(summary), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lineload",
        description="Deterministic Ethernet load generation, scripting, "
                    "and capture analysis",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    plan = subs.add_parser("plan", help="print frame size, gap, and duration")
    _add_frame_flags(plan)

    generate = subs.add_parser("generate", help="simulate a load run, "
                                                "write pcap and report")
    _add_frame_flags(generate)
    generate.add_argument("--out", metavar="PCAP", help="pcap output path")
    generate.add_argument("--report", metavar="TXT", help="report output path")
    generate.add_argument("--script", metavar="NSL",
                          help="also save the generated script")

    runner = subs.add_parser("run-script", help="execute a .nsl script")
    runner.add_argument("script", metavar="SCRIPT.nsl")
    runner.add_argument("--rate", type=int, choices=(100, 1000), default=100)
    runner.add_argument("--out", metavar="PCAP", help="pcap output path")
    runner.add_argument("--report", metavar="TXT", help="report output path")

    analyzer = subs.add_parser("analyze", help="measure load in a pcap capture")
    analyzer.add_argument("pcap", metavar="FILE.pcap")
    analyzer.add_argument("--rate", type=int, choices=(100, 1000), default=100)
    analyzer.add_argument("--period-ticks", type=int, default=None,
                          help="expected inter-arrival period in 8 ns ticks")
    analyzer.add_argument("--json", action="store_true",
                          help="print a machine-readable summary")
    return parser


_COMMANDS = {
    "plan": _cmd_plan,
    "generate": _cmd_generate,
    "run-script": _cmd_run_script,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
