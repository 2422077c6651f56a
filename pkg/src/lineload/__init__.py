"""Deterministic PROFINET-style Ethernet load generation and analysis.

The package plans traffic at an exact fraction of line rate, simulates
a register-programmed frame generator device on an 8 ns tick clock,
runs test scripts against it, and writes/measures pcap captures.
"""

from . import capture, cli, engine, frames, loadmath, nsl, registers
from .capture import CaptureSummary, analyze, read_pcap, report, write_pcap
from .engine import DeviceMode, MonitorConfig, RunResult, WireEvent, run
from .frames import FrameSpec, MacAddress, WireBytes
from .loadmath import (
    LoadConfig,
    LoadPlan,
    achieved_load,
    duration,
    frame_time,
    gap_schedule,
    load_gap,
)
from .nsl import (
    NslProgram,
    compile_program,
    generate_load_script,
    parse,
    pretty_print,
)

__all__ = [
    "CaptureSummary",
    "DeviceMode",
    "FrameSpec",
    "LoadConfig",
    "LoadPlan",
    "MacAddress",
    "MonitorConfig",
    "NslProgram",
    "RunResult",
    "WireBytes",
    "WireEvent",
    "achieved_load",
    "analyze",
    "capture",
    "cli",
    "compile_program",
    "duration",
    "engine",
    "frame_time",
    "frames",
    "gap_schedule",
    "generate_load_script",
    "load_gap",
    "loadmath",
    "nsl",
    "parse",
    "pretty_print",
    "read_pcap",
    "registers",
    "report",
    "run",
    "write_pcap",
]

__version__ = "0.1.0"
