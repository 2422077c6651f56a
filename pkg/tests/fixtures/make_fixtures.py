"""Regenerate the reference pcap fixtures.

Deliberately self-contained: frames, CRC-32, and pcap layout are built
here from scratch (struct only) so the fixtures stay independent of
the package under test.  Run from this directory:

    python3 make_fixtures.py

Files produced:
  reference_ns.pcap     nanosecond magic, little-endian
  reference_ns_be.pcap  nanosecond magic, big-endian headers
  reference_us.pcap     microsecond magic, little-endian
"""

import struct
from pathlib import Path

HERE = Path(__file__).parent

NS_MAGIC = 0xA1B23C4D
US_MAGIC = 0xA1B2C3D4


def crc32_bitwise(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def frame(index: int) -> bytes:
    """Minimum-size broadcast frame with a 4-byte counter up front."""
    body = (
        bytes.fromhex("ffffffffffff")  # destination
        + bytes.fromhex("020000000001")  # source
        + (0x8892).to_bytes(2, "big")
        + index.to_bytes(4, "big")
        + bytes(42)
    )
    return body + crc32_bitwise(body).to_bytes(4, "little")


def write_pcap(name: str, endian: str, magic: int, records) -> None:
    parts = [struct.pack(endian + "IHHiIII", magic, 2, 4, 0, 0, 65535, 1)]
    for sec, sub, data in records:
        parts.append(struct.pack(endian + "IIII", sec, sub, len(data), len(data)))
        parts.append(data)
    (HERE / name).write_bytes(b"".join(parts))


def main() -> None:
    frames = [frame(k) for k in range(3)]
    # three back-to-back 72-byte frames at 100 Mbit/s: one frame plus
    # minimum gap is 84 byte-times = 6720 ns
    ns_records = [(0, k * 6720, f) for k, f in enumerate(frames)]
    write_pcap("reference_ns.pcap", "<", NS_MAGIC, ns_records)
    write_pcap("reference_ns_be.pcap", ">", NS_MAGIC, ns_records)
    us_records = [(0, k * 7, f) for k, f in enumerate(frames)]
    write_pcap("reference_us.pcap", "<", US_MAGIC, us_records)
    print("wrote", ", ".join(p.name for p in sorted(HERE.glob("reference_*.pcap"))))


if __name__ == "__main__":
    main()
