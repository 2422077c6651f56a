"""Symbolic register map of the virtual device.

Each data port carries one frame generator and one frame analyser,
both programmed through named registers.  Names are symbolic on
purpose: scripts address functionality, not bus offsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Union

from .frames import MacAddress

PORTS = ("A", "B", "C", "D")
MONITOR_PORT = "L"


class RegisterError(ValueError):
    """Unknown register, bad value kind, or write to a read-only register."""


class TransmitterState(IntEnum):
    DISABLED = 0
    TRANSMITTING = 1
    DONE = 2


class AnalyserState(IntEnum):
    DISABLED = 0
    RECEIVING = 1
    HOLD = 2


RegValue = Union[int, Fraction, MacAddress, bytes]


@dataclass(frozen=True)
class RegisterSpec:
    name: str
    kind: str  # flag | int | gap | mac | hdr | pattern | state
    writable: bool
    default: RegValue | None


def _spec(name: str, kind: str, writable: bool = True, default=None) -> RegisterSpec:
    return RegisterSpec(name, kind, writable, default)


REGISTERS: dict[str, RegisterSpec] = {
    r.name: r
    for r in (
        # generator
        _spec("TRANSMITTER_CONTROL", "flag", default=0),
        _spec("TRANSMITTER_STATE", "state", writable=False, default=0),
        _spec("INTERFRAME_GAP", "gap", default=Fraction(12)),  # byte-times
        _spec("START_DELAY", "int", default=0),  # ticks
        _spec("NUMBER_OF_FRAMES", "int", default=0),
        _spec("DST_MAC", "mac", default=MacAddress((0xFF,) * 6)),
        _spec("SRC_MAC", "mac", default=MacAddress((0x02, 0, 0, 0, 0, 0))),
        _spec("HDR_AFTER_MAC", "hdr", default=0x8892),
        _spec("PAYLOAD_SIZE", "int", default=46),
        # analyser
        _spec("ANALYSER_CONTROL", "flag", default=0),
        _spec("ANALYSER_STATE", "state", writable=False, default=0),
        _spec("FRAMES_EXP", "int", default=0),  # 0 = no limit
        _spec("FRAMES_EXP_OK", "int", default=0),  # 0 = no limit
        _spec("NUMBER_OF_RECV_OK", "int", writable=False, default=0),
        _spec("NUMBER_OF_RECV_NOK", "int", writable=False, default=0),
        _spec("ERROR_CODE", "int", default=0),
        # analyser match pattern; unwritten fields match anything
        _spec("MATCH_DST", "mac"),
        _spec("MATCH_SRC", "mac"),
        _spec("MATCH_ETHERTYPE", "int"),
        _spec("MATCH_PAYLOAD", "pattern"),
    )
}

ALIASES = {"TR_CTRL": "TRANSMITTER_CONTROL"}

READ_ONLY = frozenset(r.name for r in REGISTERS.values() if not r.writable)

# symbolic state values accepted where a state register is compared
STATE_NAMES: dict[str, dict[str, int]] = {
    "TRANSMITTER_STATE": {s.name: int(s) for s in TransmitterState},
    "ANALYSER_STATE": {s.name: int(s) for s in AnalyserState},
}


def resolve_register(name: str) -> RegisterSpec:
    canonical = ALIASES.get(name, name)
    try:
        return REGISTERS[canonical]
    except KeyError:
        raise RegisterError(f"unknown register {name}") from None


def check_value(register: RegisterSpec, value: RegValue) -> RegValue:
    """Normalize a value for a register; reject kind mismatches."""
    kind = register.kind
    if kind == "flag":
        if value not in (0, 1):
            raise RegisterError(f"{register.name} takes 0 or 1, got {value!r}")
        return int(value)
    if kind in ("int", "state"):
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise RegisterError(f"{register.name} takes a non-negative integer, got {value!r}")
        return value
    if kind == "gap":
        if isinstance(value, bool) or not isinstance(value, (int, Fraction)) or value < 0:
            raise RegisterError(f"{register.name} takes a non-negative byte-time, got {value!r}")
        return Fraction(value)
    if kind == "mac":
        if not isinstance(value, MacAddress):
            raise RegisterError(f"{register.name} takes a MAC address, got {value!r}")
        return value
    if kind == "hdr":
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < 1 << 48:
            raise RegisterError(
                f"{register.name} takes an Ethertype or VLAN-tag+Ethertype value, got {value!r}"
            )
        return value
    if kind == "pattern":
        if not isinstance(value, bytes):
            raise RegisterError(f"{register.name} takes a byte string, got {value!r}")
        return value
    raise RegisterError(f"unhandled register kind {kind}")


@dataclass(frozen=True)
class RegWrite:
    port: str
    register: str  # canonical name
    value: RegValue
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Delay:
    ticks: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StartMarker:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StopMarker:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExitCheck:
    """Conditional loop exit: leave the enclosing unrolled loop when true."""

    port: str
    register: str
    expected: RegValue
    loop_id: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FinalCheck:
    """Reporting-phase assertion, evaluated after execution stops."""

    port: str
    register: str
    expected: RegValue
    line: int = field(default=0, compare=False)


RegisterOp = Union[RegWrite, Delay, StartMarker, StopMarker, ExitCheck, FinalCheck]


@dataclass(frozen=True)
class RegisterProgram:
    """Flat, loop-free operation list plus the script's report metadata.

    Loops arrive fully unrolled; exit_targets maps each ExitCheck
    loop_id to the op index just past that loop's last unrolled op, so
    a satisfied check can skip the remaining iterations.
    """

    ops: tuple[RegisterOp, ...]
    report: str = ""
    refs: tuple[str, ...] = ()
    exit_targets: tuple[tuple[int, int], ...] = ()
