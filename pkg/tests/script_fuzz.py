"""Random well-formed test scripts for parser round-trip checks."""

import random

PORTS = "ABCD"

WRITE_TARGETS = (
    ("TRANSMITTER_CONTROL", "flag"),
    ("TR_CTRL", "flag"),
    ("ANALYSER_CONTROL", "flag"),
    ("INTERFRAME_GAP", "gap"),
    ("START_DELAY", "int"),
    ("NUMBER_OF_FRAMES", "int"),
    ("PAYLOAD_SIZE", "int"),
    ("DST_MAC", "mac"),
    ("SRC_MAC", "mac"),
    ("MATCH_DST", "mac"),
    ("HDR_AFTER_MAC", "hdr"),
    ("MATCH_ETHERTYPE", "hdr"),
    ("FRAMES_EXP", "int"),
    ("MATCH_PAYLOAD", "text"),
)

CHECK_TARGETS = (
    ("TRANSMITTER_STATE", "state"),
    ("ANALYSER_STATE", "state"),
    ("NUMBER_OF_RECV_OK", "int"),
    ("NUMBER_OF_RECV_NOK", "int"),
    ("ERROR_CODE", "int"),
)

STATES = ("IDLE", "TRANSMITTING", "DONE", "COUNTING", "HOLD", "0", "1", "2")

_TEXT_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789 _-."


def _text(rng: random.Random) -> str:
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randint(1, 24)))


def _mac(rng: random.Random) -> str:
    return ":".join(f"{rng.randrange(256):02x}" for _ in range(6))


def _value(rng: random.Random, kind: str) -> str:
    if kind == "flag":
        return rng.choice("01")
    if kind == "int":
        n = rng.randint(0, 10**6)
        return f"0x{n:X}" if rng.random() < 0.3 else str(n)
    if kind == "gap":
        if rng.random() < 0.5:
            return str(rng.randint(12, 40000))
        digits = rng.randint(1, 9)
        frac = "".join(rng.choice("0123456789") for _ in range(digits))
        return f"{rng.randint(12, 2000)}.{frac}"
    if kind == "mac":
        return _mac(rng)
    if kind == "hdr":
        if rng.random() < 0.5:
            return f"0x{rng.randrange(0x600, 0x10000):04X}"
        tci = rng.randrange(0x10000)
        return f"0x8100{tci:04X}{rng.randrange(0x600, 0x10000):04X}"
    if kind == "text":
        return f'"{_text(rng)}"'
    raise ValueError(kind)


def _comment(rng: random.Random, line: str) -> str:
    if rng.random() < 0.15:
        return f"{line}  # {_text(rng)}"
    return line


def _exec_block(rng: random.Random, depth: int) -> list[str]:
    lines = []
    for _ in range(rng.randint(1, 4)):
        roll = rng.random()
        if roll < 0.45:
            lines.append(f"WAIT_FOR {rng.randint(1, 10**6)} "
                         f"{rng.choice(('TICKS', 'CYCLES'))}")
        elif roll < 0.65 and depth > 0:
            lines.append(f"LOOP {rng.randint(1, 5)}")
            lines.extend(_exec_block(rng, depth - 1))
            reg, _ = rng.choice(CHECK_TARGETS)
            cmd = rng.choice(("EXITONCHECK", "EXITONCHECKM"))
            lines.append(f"{cmd} {rng.choice(PORTS)} {reg} {rng.choice(STATES)}")
            lines.append("END LOOP")
        else:
            reg, kind = rng.choice(WRITE_TARGETS)
            lines.append(f"OCBM_WRITE {rng.choice(PORTS)} {reg} "
                         f"{_value(rng, kind)}")
    return lines


def make_random_script(rng: random.Random) -> str:
    lines = []
    if rng.random() < 0.8:
        lines.append(f'REPORT "{_text(rng)}"')
    for _ in range(rng.randint(0, 2)):
        lines.append(f'REF "{_text(rng)}"')
    for i in range(rng.randint(0, 3)):
        kind = rng.choice(("int", "gap", "mac", "text", "hdr"))
        lines.append(f"DEFINE K{i} {_value(rng, kind)}")
    for _ in range(rng.randint(1, 5)):
        reg, kind = rng.choice(WRITE_TARGETS)
        lines.append(f"OCBM_WRITE {rng.choice(PORTS)} {reg} {_value(rng, kind)}")
    lines.append("ETH_TXRX_START")
    lines.extend(_exec_block(rng, depth=2))
    lines.append("ETH_TXRX_STOP")
    for _ in range(rng.randint(0, 3)):
        reg, kind = rng.choice(CHECK_TARGETS)
        value = rng.choice(STATES) if kind == "state" else _value(rng, "int")
        lines.append(f"OCBM_CHECK {rng.choice(PORTS)} {reg} {value}")
    out = []
    for line in lines:
        if rng.random() < 0.1:
            out.append("")
        if rng.random() < 0.07:
            out.append(f"# {_text(rng)}")
        out.append(_comment(rng, line))
    return "\n".join(out) + "\n"
