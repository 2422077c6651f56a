"""pcap writing/reading, capture measurement, and run reports."""

import random
import struct
from dataclasses import replace
from pathlib import Path

import pytest

from lineload.capture import (
    CaptureError,
    analyze,
    format_duration,
    read_pcap,
    report,
    report_failed,
    write_pcap,
)
from lineload.engine import run
from lineload.frames import WireBytes, serialize

from conftest import compile_text, make_config, make_spec, rx_event

FIXTURES = Path(__file__).parent / "fixtures"

GEN = """\
OCBM_WRITE A PAYLOAD_SIZE {payload}
OCBM_WRITE A INTERFRAME_GAP {gap}
OCBM_WRITE A NUMBER_OF_FRAMES {frames}
OCBM_WRITE A TR_CTRL 1
ETH_TXRX_START
WAIT_FOR {wait} TICKS
ETH_TXRX_STOP
"""


def gen_events(payload=46, gap=12, frames=5, wait=10**7):
    script = GEN.format(payload=payload, gap=gap, frames=frames, wait=wait)
    return run(compile_text(script)).events


def test_write_empty_capture(tmp_path):
    path = tmp_path / "empty.pcap"
    write_pcap([], path)
    assert path.stat().st_size == 24
    assert len(read_pcap(path)) == 0


def test_write_single_frame(tmp_path):
    path = tmp_path / "one.pcap"
    write_pcap([rx_event(0, "A")], path)
    assert path.stat().st_size == 24 + 16 + 64


def test_round_trip_preserves_ticks_and_bytes(tmp_path):
    rng = random.Random(3)
    t = 0
    events = []
    for _ in range(25):
        t += rng.randint(1, 10**9)
        events.append(rx_event(t, "A", payload=rng.randbytes(rng.randint(0, 500))))
    path = tmp_path / "rt.pcap"
    write_pcap(events, path)
    capture = read_pcap(path)
    assert capture.resolution == "ns"
    assert not capture.byte_swapped
    assert not capture.quantized
    assert [e.timestamp for e in capture.events] == [e.timestamp for e in events]
    assert [e.frame.data for e in capture.events] == [e.frame.data for e in events]


def test_write_rejects_unsorted():
    events = [rx_event(100, "A"), rx_event(50, "A")]
    with pytest.raises(CaptureError):
        write_pcap(events, "/dev/null")


def test_reference_fixture_nanosecond():
    capture = read_pcap(FIXTURES / "reference_ns.pcap")
    assert [e.timestamp for e in capture.events] == [0, 840, 1680]
    assert capture.resolution == "ns"
    assert not capture.byte_swapped
    assert not capture.quantized
    assert all(len(e.frame.data) == 64 for e in capture.events)


def test_reference_fixture_byte_swapped():
    capture = read_pcap(FIXTURES / "reference_ns_be.pcap")
    assert capture.byte_swapped
    assert [e.timestamp for e in capture.events] == [0, 840, 1680]


def test_reference_fixture_microsecond():
    capture = read_pcap(FIXTURES / "reference_us.pcap")
    assert capture.resolution == "us"
    # 7 us and 14 us become 875 and 1750 ticks of 8 ns
    assert [e.timestamp for e in capture.events] == [0, 875, 1750]


def test_nanosecond_remainder_sets_quantized_flag(tmp_path):
    frame = serialize(make_spec(46)).data
    raw = struct.pack("<IHHiIII", 0xA1B23C4D, 2, 4, 0, 0, 65535, 1)
    raw += struct.pack("<IIII", 0, 12, len(frame), len(frame)) + frame
    path = tmp_path / "odd.pcap"
    path.write_bytes(raw)
    capture = read_pcap(path)
    assert capture.quantized
    assert capture.events[0].timestamp == 1  # 12 ns floor-divides to 1 tick


@pytest.mark.parametrize("mangle, fragment", [
    (lambda raw: raw[:10], "too short"),
    (lambda raw: b"\x00" * 4 + raw[4:], "not a pcap file"),
    (lambda raw: raw[:30], "truncated record header"),
    (lambda raw: raw[:45], "truncated record data"),
    (lambda raw: raw[: struct.calcsize("<IHHiIII")]
     + struct.pack("<IIII", 0, 0, 10, 64) + bytes(10), "snap-truncated"),
])
def test_read_rejects_malformed(tmp_path, mangle, fragment):
    good = tmp_path / "good.pcap"
    write_pcap([rx_event(0, "A")], good)
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(mangle(good.read_bytes()))
    with pytest.raises(CaptureError) as err:
        read_pcap(bad)
    assert fragment in str(err.value)


def test_read_rejects_non_ethernet_linktype(tmp_path):
    raw = struct.pack("<IHHiIII", 0xA1B23C4D, 2, 4, 0, 0, 65535, 113)
    path = tmp_path / "sll.pcap"
    path.write_bytes(raw)
    with pytest.raises(CaptureError) as err:
        read_pcap(path)
    assert "linktype" in str(err.value)


def test_analyze_full_load_run():
    summary = analyze(gen_events(frames=5), 100)
    assert summary.frames == 5
    assert summary.size == 72
    assert summary.achieved_load == 1.0
    assert summary.deviation_ticks == (0, 0, 0, 0)
    assert summary.interarrival_ticks == (840,) * 4
    assert summary.fcs_bad == 0
    assert summary.achieved_load_span == pytest.approx(5 / 4, rel=1e-12)


def test_analyze_from_file_matches_in_memory(tmp_path):
    events = gen_events(payload=1500, gap=1550, frames=4)
    path = tmp_path / "cap.pcap"
    write_pcap(events, path)
    from_file = analyze(read_pcap(path), 100)
    in_memory = analyze(events, 100)
    # windowed load charges the last frame only its own duration, so the
    # exact value for F frames at load L is F*L / (F - 1 + L)
    assert from_file.achieved_load == in_memory.achieved_load
    assert from_file.achieved_load == pytest.approx(4 * 0.5 / 3.5, rel=1e-12)
    assert abs(from_file.achieved_load - 0.5) <= 0.25 / 3
    assert from_file.interarrival_ticks == (30760,) * 3
    assert "microsecond" not in " ".join(from_file.notes)


def test_analyze_explicit_period():
    summary = analyze(gen_events(frames=3), 100, expected_period_ticks=800)
    assert summary.deviation_ticks == (40, 40)
    assert summary.expected_period_ticks == 800


def test_analyze_counts_bad_fcs():
    events = list(gen_events(frames=3))
    broken = bytearray(events[1].frame.data)
    broken[20] ^= 0xFF
    events[1] = replace(events[1],
                        frame=WireBytes(bytes(broken), len(broken) + 8))
    summary = analyze(events, 100)
    assert summary.fcs_bad == 1
    assert "FAIL" in report(summary)


def test_analyze_single_frame():
    summary = analyze(gen_events(frames=1), 100)
    assert summary.frames == 1
    assert summary.achieved_load == 1.0  # the frame's own duration
    assert summary.achieved_load_span is None
    assert any("single-frame" in note for note in summary.notes)


def test_analyze_mixed_sizes():
    events = [rx_event(0, "A"), rx_event(100000, "A", payload=bytes(1500))]
    summary = analyze(events, 100)
    assert summary.size is None
    assert summary.achieved_load_span is None
    assert any("mixed" in note for note in summary.notes)


def test_analyze_rejects_empty_and_unsorted():
    with pytest.raises(CaptureError):
        analyze([], 100)
    with pytest.raises(CaptureError):
        analyze([rx_event(10, "A"), rx_event(0, "A")], 100)


def test_report_passes_for_clean_run():
    config = make_config(1.0, 5, payload_len=46)
    text = report(analyze(gen_events(frames=5), 100), config)
    assert not report_failed(text)
    assert "achieved load: 100.00%" in text
    assert "-> PASS" in text


def test_report_flags_frame_count_mismatch():
    config = make_config(1.0, 6, payload_len=46)
    text = report(analyze(gen_events(frames=5), 100), config)
    assert report_failed(text)
    assert "expected frames: 6 | captured 5 -> FAIL" in text


def test_report_flags_load_mismatch():
    # traffic paced at 50% against a 100% expectation
    config = make_config(1.0, 4)
    events = gen_events(payload=1500, gap=1550, frames=4)
    text = report(analyze(events, 100), config)
    assert report_failed(text)


def test_report_includes_checks_and_warnings():
    result = run(compile_text(
        "OCBM_WRITE A NUMBER_OF_FRAMES 2\n"
        "OCBM_WRITE A INTERFRAME_GAP 1\n"
        "OCBM_WRITE A TR_CTRL 1\n"
        "ETH_TXRX_START\nWAIT_FOR 5000 TICKS\nETH_TXRX_STOP\n"
        "OCBM_CHECK A TRANSMITTER_STATE DONE\n"
        "OCBM_CHECK A NUMBER_OF_RECV_OK 3\n"))
    summary = analyze(result.events, 100)
    text = report(summary, checks=result.checks, warnings=result.warnings,
                  monitor_drops=result.monitor_drops)
    assert "check A TRANSMITTER_STATE" in text
    assert "-> PASS" in text and "-> FAIL" in text  # second check is wrong
    assert "warning:" in text and "clamped" in text
    assert "monitor drops: 0" in text
    assert report_failed(text)


def test_summary_to_dict():
    summary = analyze(gen_events(frames=3), 100)
    doc = summary.to_dict()
    assert doc["frames"] == 3
    assert doc["achieved_load"] == 1.0
    assert doc["deviation_ticks_max"] == 0
    assert "interarrival_ticks" not in doc
    series = summary.to_dict(include_series=True)
    assert series["interarrival_ticks"] == [840, 840]


def test_format_duration_units():
    assert format_duration(123.04e-6) == "123.04 µs"
    assert format_duration(7.80122816) == "7.80123 s"
    assert format_duration(0.0012) == "0.00120 s"
