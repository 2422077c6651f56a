"""Ethernet frame model: on-wire sizes, serialization, parsing.

The on-wire size S of a frame counts everything the link is busy with:
preamble (7 bytes), start-of-frame delimiter (1), both MAC addresses,
an optional 802.1Q tag, the Ethertype, the payload, and the 4-byte FCS.
Capture files store everything *except* preamble/SFD, so a serialized
frame is always S - 8 bytes long.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

PREAMBLE_BYTES = 7
SFD_BYTES = 1
MAC_BYTES = 6
VLAN_TAG_BYTES = 4
ETHERTYPE_BYTES = 2
FCS_BYTES = 4
MIN_IFG_BYTES = 12  # mandatory idle period between frames, in byte-times

MIN_PAYLOAD_TAGGED = 42
MIN_PAYLOAD_UNTAGGED = 46  # shorter payloads are zero-padded up to this
MAX_PAYLOAD = 1500

# preamble + SFD + 2 MACs + Ethertype + FCS
UNTAGGED_OVERHEAD = 26
TAGGED_OVERHEAD = UNTAGGED_OVERHEAD + VLAN_TAG_BYTES

VLAN_TPID = 0x8100
ETHERTYPE_PROFINET_RT = 0x8892  # default payload type; configurable

# CRC-32 of <data + its own FCS> for any intact frame
_CRC_RESIDUE = 0x2144DF1C


class FrameError(ValueError):
    """Invalid frame field or unparseable frame bytes."""


@dataclass(frozen=True, slots=True)
class MacAddress:
    """48-bit MAC address, printable as colon-separated hex."""

    octets: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.octets, bytes):
            object.__setattr__(self, "octets", bytes(self.octets))
        if len(self.octets) != MAC_BYTES:
            raise FrameError(f"MAC address needs exactly 6 octets, got {len(self.octets)}")

    @classmethod
    def from_str(cls, text: str) -> "MacAddress":
        parts = text.strip().split(":")
        if len(parts) != MAC_BYTES or not all(len(p) == 2 for p in parts):
            raise FrameError(f"bad MAC address {text!r}, expected aa:bb:cc:dd:ee:ff")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError:
            raise FrameError(f"bad MAC address {text!r}, expected aa:bb:cc:dd:ee:ff") from None

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


BROADCAST = MacAddress(b"\xff" * 6)


def make_vlan_tag(vid: int, pcp: int = 0, dei: bool = False) -> int:
    """Build the full 4-byte 802.1Q tag value (TPID 0x8100 + TCI)."""
    if not 0 <= vid <= 0xFFF:
        raise FrameError(f"VLAN id {vid} out of range 0..4095")
    if not 0 <= pcp <= 7:
        raise FrameError(f"VLAN priority {pcp} out of range 0..7")
    tci = (pcp << 13) | (int(dei) << 12) | vid
    return (VLAN_TPID << 16) | tci


@dataclass(frozen=True, slots=True)
class FrameSpec:
    """One Ethernet frame template.

    ``vlan`` is the full 4-byte 802.1Q tag value (TPID 0x8100 in the top
    16 bits) or ``None`` for untagged frames.  Payloads shorter than the
    Ethernet minimum (46 untagged, 42 tagged) are zero-padded on
    construction; payloads over 1500 bytes are rejected.
    """

    dst: MacAddress
    src: MacAddress
    payload: bytes = b""
    ethertype: int = ETHERTYPE_PROFINET_RT
    vlan: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.dst, MacAddress) or not isinstance(self.src, MacAddress):
            raise FrameError("dst and src must be MacAddress values")
        if not 0 <= self.ethertype <= 0xFFFF:
            raise FrameError(f"ethertype 0x{self.ethertype:x} does not fit 16 bits")
        if self.vlan is not None and (self.vlan >> 16) != VLAN_TPID:
            raise FrameError(f"vlan tag 0x{self.vlan:x} must carry TPID 0x{VLAN_TPID:04x}")
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameError(f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}")
        minimum = MIN_PAYLOAD_TAGGED if self.vlan is not None else MIN_PAYLOAD_UNTAGGED
        if len(self.payload) < minimum:
            object.__setattr__(self, "payload", self.payload.ljust(minimum, b"\x00"))


@dataclass(frozen=True, slots=True)
class WireBytes:
    """Serialized frame as it appears in captures: dst..FCS, no preamble/SFD."""

    data: bytes
    s_on_wire: int

    def __post_init__(self) -> None:
        if self.s_on_wire != len(self.data) + PREAMBLE_BYTES + SFD_BYTES:
            raise FrameError(
                f"s_on_wire {self.s_on_wire} inconsistent with {len(self.data)} capture bytes"
            )


@dataclass(frozen=True, slots=True)
class ParsedFrame:
    """Result of parsing capture bytes; FCS mismatch is flagged, not fatal."""

    spec: FrameSpec
    fcs_ok: bool


def frame_size(spec: FrameSpec) -> int:
    """On-wire size S in bytes, preamble/SFD and FCS included."""
    overhead = TAGGED_OVERHEAD if spec.vlan is not None else UNTAGGED_OVERHEAD
    return overhead + len(spec.payload)


def fcs(mac_frame: bytes) -> bytes:
    """IEEE 802.3 frame check sequence over dst..payload, as capture bytes."""
    return zlib.crc32(mac_frame).to_bytes(4, "little")


def fcs_valid(data: bytes) -> bool:
    """True if the trailing 4 bytes are the correct FCS for the rest."""
    return len(data) > FCS_BYTES and zlib.crc32(data) == _CRC_RESIDUE


def serialize(spec: FrameSpec) -> WireBytes:
    """Byte layout: dst(6) src(6) [tag(4)] ethertype(2 BE) payload FCS(4)."""
    head = bytearray(spec.dst.octets)
    head += spec.src.octets
    if spec.vlan is not None:
        head += spec.vlan.to_bytes(4, "big")
    head += spec.ethertype.to_bytes(2, "big")
    head += spec.payload
    mac_frame = bytes(head)
    data = mac_frame + fcs(mac_frame)
    return WireBytes(data, len(data) + PREAMBLE_BYTES + SFD_BYTES)


def parse(data: bytes | WireBytes) -> ParsedFrame:
    """Inverse of serialize.  Raises FrameError on truncated input."""
    if isinstance(data, WireBytes):
        data = data.data
    if len(data) < 64:
        raise FrameError(f"truncated frame: {len(data)} bytes, minimum is 64")
    dst = MacAddress(data[0:6])
    src = MacAddress(data[6:12])
    if int.from_bytes(data[12:14], "big") == VLAN_TPID:
        vlan: int | None = int.from_bytes(data[12:16], "big")
        ethertype = int.from_bytes(data[16:18], "big")
        payload = data[18:-FCS_BYTES]
    else:
        vlan = None
        ethertype = int.from_bytes(data[12:14], "big")
        payload = data[14:-FCS_BYTES]
    spec = FrameSpec(dst=dst, src=src, payload=payload, ethertype=ethertype, vlan=vlan)
    return ParsedFrame(spec, fcs_valid(data))
