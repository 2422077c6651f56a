"""Shared builders for the test suite."""

from lineload.engine import WireEvent
from lineload.frames import FrameSpec, MacAddress, serialize
from lineload.loadmath import LoadConfig
from lineload.nsl import compile_program, parse

DST = MacAddress.from_str("ff:ff:ff:ff:ff:ff")
SRC = MacAddress.from_str("02:00:00:00:00:01")


def make_spec(payload_len: int = 1500, **kwargs) -> FrameSpec:
    return FrameSpec(dst=DST, src=SRC, payload=bytes(payload_len), **kwargs)


def make_config(load: float, frames: int, payload_len: int = 1500,
                rate: int = 100) -> LoadConfig:
    return LoadConfig(load=load, rate=rate, frames=frames,
                      spec=make_spec(payload_len))


def rx_event(ts: int, port: str, payload: bytes = b"", ethertype: int = 0x8892,
             dst: MacAddress = DST, src: MacAddress = SRC) -> WireEvent:
    spec = FrameSpec(dst=dst, src=src, payload=payload, ethertype=ethertype)
    return WireEvent(ts, port, "rx", serialize(spec))


def compile_text(text: str):
    return compile_program(parse(text))
