"""pcap I/O for wire events, plus capture measurement and run reports.

Files are written in the classic pcap format with nanosecond
timestamps (magic 0xA1B23C4D), because 8 ns ticks do not survive
microsecond rounding.  Readers accept both the nanosecond and the
microsecond magic in either byte order.  Capture records carry the
frame from destination MAC through FCS; preamble and SFD never appear
in captures, so a record of length n represents n + 8 on-wire bytes.

pcap files carry no port information: events read back are attributed
to port A as received traffic, with timestamps converted to ticks.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .frames import PREAMBLE_BYTES, SFD_BYTES, WireBytes, fcs_valid
from .loadmath import (
    MIN_IFG_BYTES,
    TICK_NS,
    LoadConfig,
    duration,
    frame_time,
    rate_bits,
    ticks_per_byte,
)
from .engine import CheckResult, WireEvent

NS_MAGIC = 0xA1B23C4D
US_MAGIC = 0xA1B2C3D4
SNAPLEN = 65535
LINKTYPE_ETHERNET = 1

_GLOBAL_HEADER = struct.Struct("<IHHiIII")
_RECORD_HEADER = struct.Struct("<IIII")

_NS_PER_SEC = 1_000_000_000
_US_PER_SEC = 1_000_000
_TICKS_PER_US = 1000 // TICK_NS


class CaptureError(ValueError):
    """Unreadable capture file or invalid event stream."""


def write_pcap(events: Sequence[WireEvent], path) -> None:
    """Write time-ordered events as a nanosecond-resolution pcap file."""
    chunks = [_GLOBAL_HEADER.pack(NS_MAGIC, 2, 4, 0, 0, SNAPLEN, LINKTYPE_ETHERNET)]
    last = None
    for event in events:
        if last is not None and event.timestamp < last:
            raise CaptureError("events not sorted by timestamp")
        last = event.timestamp
        sec, nsec = divmod(event.timestamp * TICK_NS, _NS_PER_SEC)
        data = event.frame.data
        chunks.append(_RECORD_HEADER.pack(sec, nsec, len(data), len(data)))
        chunks.append(data)
    Path(path).write_bytes(b"".join(chunks))


@dataclass(frozen=True)
class PcapCapture:
    """Events read from a pcap file plus format details."""

    events: tuple[WireEvent, ...]
    resolution: str  # "ns" | "us"
    byte_swapped: bool
    linktype: int
    quantized: bool  # some timestamps were not whole 8 ns ticks

    def __len__(self) -> int:
        return len(self.events)


_MAGIC_TABLE = {
    NS_MAGIC: ("<", "ns"),
    US_MAGIC: ("<", "us"),
    0x4D3CB2A1: (">", "ns"),
    0xD4C3B2A1: (">", "us"),
}


def read_pcap(path) -> PcapCapture:
    """Read a classic pcap file back into tick-timestamped events."""
    raw = Path(path).read_bytes()
    if len(raw) < _GLOBAL_HEADER.size:
        raise CaptureError(f"{path}: too short for a pcap header")
    magic = struct.unpack_from("<I", raw)[0]
    if magic not in _MAGIC_TABLE:
        raise CaptureError(f"{path}: not a pcap file (magic 0x{magic:08x})")
    endian, resolution = _MAGIC_TABLE[magic]
    _, _, _, _, _, _, linktype = struct.unpack_from(endian + "IHHiIII", raw)
    if linktype != LINKTYPE_ETHERNET:
        raise CaptureError(f"{path}: linktype {linktype} is not Ethernet")
    record = struct.Struct(endian + "IIII")
    events = []
    quantized = False
    pos = _GLOBAL_HEADER.size
    while pos < len(raw):
        if pos + record.size > len(raw):
            raise CaptureError(f"{path}: truncated record header at byte {pos}")
        sec, sub, incl_len, orig_len = record.unpack_from(raw, pos)
        pos += record.size
        if pos + incl_len > len(raw):
            raise CaptureError(f"{path}: truncated record data at byte {pos}")
        if incl_len != orig_len:
            raise CaptureError(f"{path}: snap-truncated records are not supported")
        data = raw[pos : pos + incl_len]
        pos += incl_len
        if resolution == "ns":
            ticks, rem = divmod(sec * _NS_PER_SEC + sub, TICK_NS)
            if rem:
                quantized = True
        else:
            ticks = (sec * _US_PER_SEC + sub) * _TICKS_PER_US
        events.append(
            WireEvent(ticks, "A", "rx",
                      WireBytes(data, len(data) + PREAMBLE_BYTES + SFD_BYTES))
        )
    return PcapCapture(tuple(events), resolution, endian == ">", linktype, quantized)


@dataclass(frozen=True)
class CaptureSummary:
    """Load and timing measurements over one capture.

    achieved_load charges every frame its full duration: total wire
    bits over the window from the first frame's start to the last
    frame's end (plus its minimum gap).  achieved_load_span is the
    start-to-start form (S+12)*8*F / ((t1-t0)*R), which slightly
    overestimates because the window clips the final frame; it needs a
    uniform frame size and at least two frames.
    """

    frames: int
    size: Optional[int]  # uniform on-wire size S, None when mixed
    t0_ticks: int
    t1_ticks: int
    rate: int
    total_wire_bits: int
    achieved_load: float
    achieved_load_span: Optional[float]
    interarrival_ticks: tuple[int, ...]
    deviation_ticks: tuple[int, ...]
    expected_period_ticks: Optional[int]
    fcs_bad: int
    notes: tuple[str, ...]

    @property
    def t0(self) -> float:
        return self.t0_ticks * TICK_NS * 1e-9

    @property
    def t1(self) -> float:
        return self.t1_ticks * TICK_NS * 1e-9

    @property
    def interarrival(self) -> tuple[float, ...]:
        return tuple(t * TICK_NS * 1e-9 for t in self.interarrival_ticks)

    @property
    def deviation(self) -> tuple[float, ...]:
        return tuple(t * TICK_NS * 1e-9 for t in self.deviation_ticks)

    def to_dict(self, include_series: bool = False) -> dict:
        doc = {
            "frames": self.frames,
            "size_bytes": self.size,
            "t0_s": self.t0,
            "t1_s": self.t1,
            "rate_mbit": self.rate,
            "total_wire_bits": self.total_wire_bits,
            "achieved_load": self.achieved_load,
            "achieved_load_span": self.achieved_load_span,
            "fcs_bad": self.fcs_bad,
            "notes": list(self.notes),
        }
        if self.deviation_ticks:
            doc["deviation_ticks_min"] = min(self.deviation_ticks)
            doc["deviation_ticks_max"] = max(self.deviation_ticks)
        if include_series:
            doc["interarrival_ticks"] = list(self.interarrival_ticks)
            doc["deviation_ticks"] = list(self.deviation_ticks)
        return doc


def analyze(
    source: Union[PcapCapture, Sequence[WireEvent]],
    rate: int,
    expected_period_ticks: Optional[int] = None,
) -> CaptureSummary:
    """Measure achieved load and inter-arrival deviation of a capture.

    Deviations compare each inter-arrival gap against the preceding
    frame's wire time (frame plus minimum gap) unless an explicit
    expected period is given.
    """
    notes: list[str] = []
    if isinstance(source, PcapCapture):
        events: Sequence[WireEvent] = source.events
        if source.resolution == "us":
            notes.append("microsecond-resolution capture")
        if source.quantized:
            notes.append("timestamps truncated to whole 8 ns ticks")
    else:
        events = tuple(source)
    if not events:
        raise CaptureError("empty capture")
    tpb = ticks_per_byte(rate)
    times = [e.timestamp for e in events]
    for a, b in zip(times, times[1:]):
        if b < a:
            raise CaptureError("events not sorted by timestamp")
    sizes = [len(e.frame.data) + PREAMBLE_BYTES + SFD_BYTES for e in events]
    tf_ticks = [(s + MIN_IFG_BYTES) * tpb for s in sizes]
    total_bits = sum((s + MIN_IFG_BYTES) * 8 for s in sizes)
    window_ticks = times[-1] - times[0] + tf_ticks[-1]
    achieved = float(Fraction(total_bits * _NS_PER_SEC,
                              window_ticks * TICK_NS * rate_bits(rate)))
    uniform = len(set(sizes)) == 1
    span: Optional[float] = None
    if uniform and times[-1] > times[0]:
        span = float(Fraction(total_bits * _NS_PER_SEC,
                              (times[-1] - times[0]) * TICK_NS * rate_bits(rate)))
    elif not uniform:
        notes.append("mixed frame sizes: start-to-start load form omitted")
    else:
        notes.append("single-frame window: load covers the frame's own duration")
    interarrival = tuple(b - a for a, b in zip(times, times[1:]))
    deviation = tuple(
        gap - (expected_period_ticks if expected_period_ticks is not None else tf_ticks[k])
        for k, gap in enumerate(interarrival)
    )
    fcs_bad = sum(1 for e in events if not fcs_valid(e.frame.data))
    return CaptureSummary(
        frames=len(events),
        size=sizes[0] if uniform else None,
        t0_ticks=times[0],
        t1_ticks=times[-1],
        rate=rate,
        total_wire_bits=total_bits,
        achieved_load=achieved,
        achieved_load_span=span,
        interarrival_ticks=interarrival,
        deviation_ticks=deviation,
        expected_period_ticks=expected_period_ticks,
        fcs_bad=fcs_bad,
        notes=tuple(notes),
    )


def format_duration(seconds: float) -> str:
    """Human-readable duration with its unit (s above 1 ms, else µs)."""
    if seconds >= 1e-3:
        return f"{seconds:.5f} s"
    return f"{seconds * 1e6:.6g} µs"


def _pct(load: float) -> str:
    return f"{load * 100:.2f}%"


def report(
    summary: CaptureSummary,
    config: Optional[LoadConfig] = None,
    checks: Sequence[CheckResult] = (),
    warnings: Sequence[str] = (),
    monitor_drops: Optional[int] = None,
) -> str:
    """Human-readable run report; FAIL lines mark violated expectations."""
    lines = []
    size_text = f"{summary.size} bytes on-wire" if summary.size else "mixed sizes"
    lines.append(f"capture: {summary.frames} frames, {size_text}, "
                 f"rate {summary.rate} Mbit/s")
    lines.append(f"window: t0 = {summary.t0:.6f} s, t1 = {summary.t1:.6f} s")
    achieved_text = f"achieved load: {_pct(summary.achieved_load)} (windowed)"
    if summary.achieved_load_span is not None:
        achieved_text += f", {_pct(summary.achieved_load_span)} (start-to-start)"
    lines.append(achieved_text)
    if summary.fcs_bad:
        lines.append(f"FCS: {summary.fcs_bad} of {summary.frames} frames invalid -> FAIL")
    else:
        lines.append(f"FCS: all {summary.frames} frames valid")
    if config is not None:
        tolerance = max(1.0 / config.frames, 0.001)
        delta = abs(summary.achieved_load - config.load)
        verdict = "PASS" if delta <= tolerance else "FAIL"
        lines.append(
            f"configured load: {_pct(config.load)} | achieved {_pct(summary.achieved_load)} "
            f"| tolerance {_pct(tolerance)} -> {verdict}"
        )
        expected_t = duration(config.size, config.frames, config.load, config.rate)
        # the capture window spans frame starts, so the final frame's
        # own period is outside it: expect T * (F - 1) / F
        expected_span = expected_t * (config.frames - 1) / config.frames
        observed = summary.t1 - summary.t0
        tf = frame_time(config.size, config.rate)
        ok = abs(expected_span - observed) <= tf * (1 + 1e-9) + 1e-12
        lines.append(
            f"expected duration: {format_duration(expected_t)} | observed span "
            f"{format_duration(observed)} | expected span "
            f"{format_duration(expected_span)} -> {'PASS' if ok else 'FAIL'}"
        )
        count_ok = summary.frames == config.frames
        lines.append(
            f"expected frames: {config.frames} | captured {summary.frames} -> "
            f"{'PASS' if count_ok else 'FAIL'}"
        )
    for check in checks:
        verdict = "PASS" if check.passed else "FAIL"
        lines.append(
            f"check {check.port} {check.register}: expected {check.expected!r}, "
            f"actual {check.actual!r} -> {verdict}"
        )
    for warning in warnings:
        lines.append(f"warning: {warning}")
    if monitor_drops is not None:
        lines.append(f"monitor drops: {monitor_drops}")
    for note in summary.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def report_failed(text: str) -> bool:
    """True if any expectation line in a report is marked FAIL."""
    return any(line.rstrip().endswith("FAIL") for line in text.splitlines())
