"""Load arithmetic: gap dilution, run duration, achieved load, tick schedules.

All timing rests on two exact relations.  The simulation clock ticks
every 8 ns (125 MHz), and one byte on the wire lasts 80 ns at
100 Mbit/s or 8 ns at 1000 Mbit/s, so byte durations are always a
whole number of ticks (10 or 1).

To hold a load fraction L with frames of on-wire size S, every frame is
followed by an enlarged idle gap of

    gap = 12 + (12 + S) * (1 - L) / L     [bytes]

which reduces to the mandatory 12-byte minimum at L = 1.  Sending F
frames this way takes

    T = (S + 12) * 8 * F / (L * R)        [seconds, R in bit/s]

and conversely the load achieved over a capture window is
(S + 12) * 8 * F / ((t1 - t0) * R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .frames import MIN_IFG_BYTES, FrameSpec, frame_size

TICK_NS = 8
RATES_MBIT = (100, 1000)

MIN_FRAME_SIZE = 72  # smallest untagged frame incl. preamble/SFD/FCS


class LoadError(ValueError):
    """Load parameters outside their valid domain."""


def ticks_per_byte(rate: int) -> int:
    """Duration of one wire byte in 8 ns ticks at the given Mbit/s rate."""
    if rate not in RATES_MBIT:
        raise LoadError(f"rate must be one of {RATES_MBIT} Mbit/s, got {rate}")
    return 1000 // rate


def _check_size(s: int) -> None:
    if s < MIN_FRAME_SIZE:
        raise LoadError(f"frame size {s} below minimum {MIN_FRAME_SIZE}")


def load_gap(s: int, load: float) -> float:
    """Idle gap in bytes that dilutes frames of size s to the load fraction.

    Singular at load 0, hence the open lower bound.
    """
    _check_size(s)
    if not 0 < load <= 1:
        raise LoadError(f"load must be in (0, 1], got {load}")
    return MIN_IFG_BYTES + (MIN_IFG_BYTES + s) * (1 - load) / load


def duration(s: int, frames: int, load: float, rate: int) -> float:
    """Seconds needed to emit `frames` frames of size s at the load fraction."""
    _check_size(s)
    if frames < 1:
        raise LoadError(f"frame count must be >= 1, got {frames}")
    if not 0 < load <= 1:
        raise LoadError(f"load must be in (0, 1], got {load}")
    return (s + MIN_IFG_BYTES) * 8 * frames / (load * rate_bits(rate))


def frame_time(s: int, rate: int) -> float:
    """Seconds one frame occupies the wire, minimum gap included."""
    _check_size(s)
    return (s + MIN_IFG_BYTES) * 8 / rate_bits(rate)


def achieved_load(s: int, frames: int, t0: float, t1: float, rate: int) -> float:
    """Load fraction observed between the first and last frame timestamps.

    Values slightly above 1.0 are legal: a window between frame *starts*
    clips the final frame's own duration.
    """
    _check_size(s)
    if frames < 1:
        raise LoadError(f"frame count must be >= 1, got {frames}")
    if t1 <= t0:
        raise LoadError(f"capture window is empty: t0={t0}, t1={t1}")
    return (s + MIN_IFG_BYTES) * 8 * frames / ((t1 - t0) * rate_bits(rate))


def rate_bits(rate: int) -> int:
    if rate not in RATES_MBIT:
        raise LoadError(f"rate must be one of {RATES_MBIT} Mbit/s, got {rate}")
    return rate * 1_000_000


@dataclass(frozen=True)
class LoadConfig:
    """One load job: fraction of line rate, rate, frame count, frame template."""

    load: float
    rate: int
    frames: int
    spec: FrameSpec

    def __post_init__(self) -> None:
        if not 0 < self.load <= 1:
            raise LoadError(f"load must be in (0, 1], got {self.load}")
        if self.rate not in RATES_MBIT:
            raise LoadError(f"rate must be one of {RATES_MBIT} Mbit/s, got {self.rate}")
        if self.frames < 1:
            raise LoadError(f"frame count must be >= 1, got {self.frames}")

    @property
    def size(self) -> int:
        return frame_size(self.spec)


@dataclass(frozen=True)
class LoadPlan:
    """Tick-exact realization of a LoadConfig.

    gap_ticks carries one integer gap per frame; its running mean
    converges on nominal_ticks because quantization error is carried
    forward frame to frame instead of being rounded away.
    """

    size: int
    gap_nominal: float  # bytes
    nominal_ticks: Fraction
    duration: float  # seconds
    gap_ticks: tuple[int, ...]
    clamped: bool


def quantize_gaps(
    nominal_ticks: Fraction | int, frames: int, min_ticks: int
) -> tuple[list[int], bool]:
    """Spread a (possibly fractional) nominal tick gap over integer gaps.

    Error-carry accumulator: per frame emit floor(nominal + credit) and
    keep the remainder, so the total never drifts more than one tick
    from frames * nominal.  Gaps below min_ticks are clamped up and the
    clamp is reported.
    """
    if frames < 1:
        raise LoadError(f"frame count must be >= 1, got {frames}")
    nominal = Fraction(nominal_ticks)
    if nominal.denominator == 1:
        gap = int(nominal)
        if gap < min_ticks:
            return [min_ticks] * frames, True
        return [gap] * frames, False
    num, den = nominal.numerator, nominal.denominator
    gaps = []
    clamped = False
    credit = 0
    for _ in range(frames):
        gap, credit = divmod(num + credit, den)
        if gap < min_ticks:
            gap = min_ticks
            clamped = True
        gaps.append(gap)
    return gaps, clamped


def gap_schedule(config: LoadConfig) -> LoadPlan:
    """Plan the per-frame integer tick gaps realizing a LoadConfig."""
    s = config.size
    tpb = ticks_per_byte(config.rate)
    load = Fraction(config.load)
    gap_bytes = MIN_IFG_BYTES + (MIN_IFG_BYTES + s) * (1 - load) / load
    nominal = gap_bytes * tpb
    gaps, clamped = quantize_gaps(nominal, config.frames, MIN_IFG_BYTES * tpb)
    return LoadPlan(
        size=s,
        gap_nominal=float(gap_bytes),
        nominal_ticks=nominal,
        duration=duration(s, config.frames, config.load, config.rate),
        gap_ticks=tuple(gaps),
        clamped=clamped,
    )


def run_ticks(config: LoadConfig) -> int:
    """Upper bound in ticks on a LoadConfig run, end of final gap included."""
    s = config.size
    tpb = ticks_per_byte(config.rate)
    load = Fraction(config.load)
    gap_bytes = MIN_IFG_BYTES + (MIN_IFG_BYTES + s) * (1 - load) / load
    return math.ceil(config.frames * (s + gap_bytes) * tpb)
