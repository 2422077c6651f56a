"""Test-script language: lexer, parser, compiler, and script generation.

Scripts are line-oriented.  `#` starts a comment, one statement per
line, arguments separated by whitespace.  Values are decimal integers,
`0x` hex, decimal fractions (at most 9 fractional digits), MAC
literals like 00:11:22:33:44:55, quoted strings, or bare names bound
with DEFINE.

A well-formed script has three phases in order: a setup phase of
REPORT/REF/DEFINE lines and OCBM_WRITE register writes, an execution
phase bracketed by ETH_TXRX_START and ETH_TXRX_STOP holding the
timed statements (WAIT_FOR, LOOP/END LOOP, EXITONCHECK, further
writes), and a reporting phase of OCBM_CHECK assertions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .frames import MacAddress, frame_size
from .loadmath import MIN_FRAME_SIZE, LoadConfig, run_ticks
from .registers import (
    PORTS,
    READ_ONLY,
    STATE_NAMES,
    Delay,
    ExitCheck,
    FinalCheck,
    RegisterError,
    RegisterProgram,
    RegValue,
    RegWrite,
    StartMarker,
    StopMarker,
    check_value,
    resolve_register,
)

MAX_UNROLLED_OPS = 1_000_000
MAX_FRACTION_DIGITS = 9


class NslError(Exception):
    """Script problem with a source position."""

    def __init__(self, filename: str, line: int, col: int, message: str):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.filename = filename
        self.line = line
        self.col = col
        self.message = message


class NslSyntaxError(NslError):
    pass


class NslCompileError(NslError):
    pass


@dataclass(frozen=True)
class Name:
    """Bare identifier used as a value; resolved against DEFINEs at compile."""

    text: str


Value = (int, Fraction, MacAddress, str, Name)

_MAC_RE = re.compile(r"[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}")
_HEX_RE = re.compile(r"0[xX][0-9A-Fa-f]+")
_FRACTION_RE = re.compile(r"(\d+)\.(\d+)")
_INT_RE = re.compile(r"\d+")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Token:
    kind: str  # INT | FRACTION | MAC | STRING | IDENT
    text: str
    value: object
    line: int
    col: int


def _classify(word: str, filename: str, line: int, col: int) -> Token:
    if _MAC_RE.fullmatch(word):
        return Token("MAC", word, MacAddress.from_str(word), line, col)
    if _HEX_RE.fullmatch(word):
        return Token("INT", word, int(word, 16), line, col)
    m = _FRACTION_RE.fullmatch(word)
    if m:
        if len(m.group(2)) > MAX_FRACTION_DIGITS:
            raise NslSyntaxError(
                filename, line, col,
                f"at most {MAX_FRACTION_DIGITS} fractional digits supported: {word}",
            )
        return Token("FRACTION", word, Fraction(word), line, col)
    if _INT_RE.fullmatch(word):
        return Token("INT", word, int(word), line, col)
    if _IDENT_RE.fullmatch(word):
        return Token("IDENT", word, word, line, col)
    raise NslSyntaxError(filename, line, col, f"malformed value {word!r}")


def tokenize_line(text: str, filename: str, line: int) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t\r":
            pos += 1
            continue
        if ch == "#":
            break
        col = pos + 1
        if ch == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise NslSyntaxError(filename, line, col, "unterminated string")
            tokens.append(Token("STRING", text[pos : end + 1], text[pos + 1 : end], line, col))
            pos = end + 1
            continue
        end = pos
        while end < n and text[end] not in ' \t\r#"':
            end += 1
        tokens.append(_classify(text[pos:end], filename, line, col))
        pos = end
    return tokens


# AST -----------------------------------------------------------------

def _pos_field():
    return field(default=0, compare=False)


@dataclass(frozen=True)
class Report:
    text: str
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class Define:
    name: str
    value: object
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class Ref:
    text: str
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class OcbmWrite:
    port: str
    register: str
    value: object
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class EthTxRxStart:
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class EthTxRxStop:
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class Loop:
    count: object  # int literal or Name
    body: tuple
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class WaitFor:
    amount: object  # int literal or Name
    unit: str  # TICKS | CYCLES (1 cycle = 1 tick)
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class ExitOnCheck:
    port: str
    register: str
    expected: object
    line: int = _pos_field()
    col: int = _pos_field()


@dataclass(frozen=True)
class OcbmCheck:
    port: str
    register: str
    expected: object
    line: int = _pos_field()
    col: int = _pos_field()


Statement = (
    Report | Define | Ref | OcbmWrite | EthTxRxStart | EthTxRxStop
    | Loop | WaitFor | ExitOnCheck | OcbmCheck
)


@dataclass(frozen=True)
class NslProgram:
    statements: tuple

    @property
    def report(self) -> str:
        for stmt in self.statements:
            if isinstance(stmt, Report):
                return stmt.text
        return ""

    @property
    def defines(self) -> dict:
        return {s.name: s.value for s in self.statements if isinstance(s, Define)}

    @property
    def refs(self) -> tuple[str, ...]:
        return tuple(s.text for s in self.statements if isinstance(s, Ref))


# parser --------------------------------------------------------------

_WAIT_UNITS = ("TICKS", "CYCLES")


def _expect(tokens: list[Token], idx: int, kinds: tuple[str, ...], what: str,
            filename: str, line: int) -> Token:
    if idx >= len(tokens):
        last = tokens[-1]
        raise NslSyntaxError(filename, line, last.col + len(last.text), f"expected {what}")
    tok = tokens[idx]
    if tok.kind not in kinds:
        raise NslSyntaxError(filename, tok.line, tok.col, f"expected {what}, got {tok.text!r}")
    return tok


def _value_token(tokens: list[Token], idx: int, filename: str, line: int) -> object:
    tok = _expect(tokens, idx, ("INT", "FRACTION", "MAC", "STRING", "IDENT"),
                  "a value", filename, line)
    if tok.kind == "IDENT":
        return Name(tok.text)
    return tok.value


def _no_trailing(tokens: list[Token], idx: int, filename: str) -> None:
    if len(tokens) > idx:
        tok = tokens[idx]
        raise NslSyntaxError(filename, tok.line, tok.col,
                             f"unexpected trailing token {tok.text!r}")


def parse(text: str, filename: str = "<script>") -> NslProgram:
    top: list = []
    # stack of open loops: (count_value, body_list, line, col)
    loops: list[tuple[object, list, int, int]] = []

    def emit(stmt) -> None:
        (loops[-1][1] if loops else top).append(stmt)

    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        tokens = tokenize_line(raw, filename, lineno)
        if not tokens:
            continue
        head = tokens[0]
        if head.kind != "IDENT":
            raise NslSyntaxError(filename, head.line, head.col,
                                 f"expected a command, got {head.text!r}")
        cmd = head.text
        pos = (lineno, head.col)
        if cmd == "REPORT":
            tok = _expect(tokens, 1, ("STRING",), "a quoted string", filename, lineno)
            _no_trailing(tokens, 2, filename)
            emit(Report(tok.value, *pos))
        elif cmd == "DEFINE":
            name = _expect(tokens, 1, ("IDENT",), "a constant name", filename, lineno)
            value = _value_token(tokens, 2, filename, lineno)
            _no_trailing(tokens, 3, filename)
            emit(Define(name.text, value, *pos))
        elif cmd == "REF":
            tok = _expect(tokens, 1, ("STRING",), "a quoted string", filename, lineno)
            _no_trailing(tokens, 2, filename)
            emit(Ref(tok.value, *pos))
        elif cmd == "OCBM_WRITE":
            port = _expect(tokens, 1, ("IDENT",), "a port name", filename, lineno)
            reg = _expect(tokens, 2, ("IDENT",), "a register name", filename, lineno)
            value = _value_token(tokens, 3, filename, lineno)
            _no_trailing(tokens, 4, filename)
            emit(OcbmWrite(port.text, reg.text, value, *pos))
        elif cmd == "ETH_TXRX_START":
            _no_trailing(tokens, 1, filename)
            emit(EthTxRxStart(*pos))
        elif cmd == "ETH_TXRX_STOP":
            _no_trailing(tokens, 1, filename)
            emit(EthTxRxStop(*pos))
        elif cmd == "LOOP":
            count = _value_token(tokens, 1, filename, lineno)
            if not isinstance(count, (int, Name)):
                raise NslSyntaxError(filename, lineno, tokens[1].col,
                                     "LOOP count must be an integer or a constant name")
            _no_trailing(tokens, 2, filename)
            loops.append((count, [], lineno, head.col))
        elif cmd == "END":
            word = _expect(tokens, 1, ("IDENT",), "LOOP after END", filename, lineno)
            if word.text != "LOOP":
                raise NslSyntaxError(filename, word.line, word.col,
                                     f"expected LOOP after END, got {word.text!r}")
            _no_trailing(tokens, 2, filename)
            if not loops:
                raise NslSyntaxError(filename, lineno, head.col,
                                     "END LOOP without an open LOOP")
            count, body, lline, lcol = loops.pop()
            emit(Loop(count, tuple(body), lline, lcol))
        elif cmd == "WAIT_FOR":
            amount = _value_token(tokens, 1, filename, lineno)
            if not isinstance(amount, (int, Name)):
                raise NslSyntaxError(filename, lineno, tokens[1].col,
                                     "WAIT_FOR duration must be an integer or a constant name")
            unit = _expect(tokens, 2, ("IDENT",), "TICKS or CYCLES", filename, lineno)
            if unit.text not in _WAIT_UNITS:
                raise NslSyntaxError(filename, unit.line, unit.col,
                                     f"expected TICKS or CYCLES, got {unit.text!r}")
            _no_trailing(tokens, 3, filename)
            emit(WaitFor(amount, unit.text, *pos))
        elif cmd in ("EXITONCHECK", "EXITONCHECKM"):
            port = _expect(tokens, 1, ("IDENT",), "a port name", filename, lineno)
            reg = _expect(tokens, 2, ("IDENT",), "a register name", filename, lineno)
            expected = _value_token(tokens, 3, filename, lineno)
            _no_trailing(tokens, 4, filename)
            emit(ExitOnCheck(port.text, reg.text, expected, *pos))
        elif cmd == "OCBM_CHECK":
            port = _expect(tokens, 1, ("IDENT",), "a port name", filename, lineno)
            reg = _expect(tokens, 2, ("IDENT",), "a register name", filename, lineno)
            expected = _value_token(tokens, 3, filename, lineno)
            _no_trailing(tokens, 4, filename)
            emit(OcbmCheck(port.text, reg.text, expected, *pos))
        else:
            raise NslSyntaxError(filename, head.line, head.col, f"unknown command {cmd}")

    if loops:
        _, _, lline, lcol = loops[-1]
        raise NslSyntaxError(filename, last_line + 1, 1,
                             f"LOOP opened at line {lline} is never closed by END LOOP")
    return NslProgram(tuple(top))


# pretty printer ------------------------------------------------------

def format_decimal(value: Fraction) -> str:
    """Exact decimal text for a fraction whose denominator divides 10^9."""
    if value < 0:
        raise ValueError(f"negative value {value}")
    if value.denominator == 1:
        return str(value.numerator)
    scaled, rem = divmod(value.numerator * 10**MAX_FRACTION_DIGITS, value.denominator)
    if rem:
        raise ValueError(f"{value} has no {MAX_FRACTION_DIGITS}-digit decimal form")
    whole, frac = divmod(scaled, 10**MAX_FRACTION_DIGITS)
    return f"{whole}.{frac:0{MAX_FRACTION_DIGITS}d}".rstrip("0")


def format_value(value: object) -> str:
    if isinstance(value, Name):
        return value.text
    if isinstance(value, bool):
        raise ValueError("boolean is not a script value")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return format_decimal(value)
    if isinstance(value, MacAddress):
        return str(value)
    if isinstance(value, str):
        return f'"{value}"'
    raise ValueError(f"unprintable value {value!r}")


def pretty_print(program: NslProgram) -> str:
    lines: list[str] = []

    def emit(statements, indent: str) -> None:
        for stmt in statements:
            if isinstance(stmt, Report):
                lines.append(f'{indent}REPORT "{stmt.text}"')
            elif isinstance(stmt, Define):
                lines.append(f"{indent}DEFINE {stmt.name} {format_value(stmt.value)}")
            elif isinstance(stmt, Ref):
                lines.append(f'{indent}REF "{stmt.text}"')
            elif isinstance(stmt, OcbmWrite):
                lines.append(
                    f"{indent}OCBM_WRITE {stmt.port} {stmt.register} {format_value(stmt.value)}"
                )
            elif isinstance(stmt, EthTxRxStart):
                lines.append(f"{indent}ETH_TXRX_START")
            elif isinstance(stmt, EthTxRxStop):
                lines.append(f"{indent}ETH_TXRX_STOP")
            elif isinstance(stmt, Loop):
                lines.append(f"{indent}LOOP {format_value(stmt.count)}")
                emit(stmt.body, indent + "    ")
                lines.append(f"{indent}END LOOP")
            elif isinstance(stmt, WaitFor):
                lines.append(f"{indent}WAIT_FOR {format_value(stmt.amount)} {stmt.unit}")
            elif isinstance(stmt, ExitOnCheck):
                lines.append(
                    f"{indent}EXITONCHECK {stmt.port} {stmt.register} {format_value(stmt.expected)}"
                )
            elif isinstance(stmt, OcbmCheck):
                lines.append(
                    f"{indent}OCBM_CHECK {stmt.port} {stmt.register} {format_value(stmt.expected)}"
                )
            else:
                raise ValueError(f"unprintable statement {stmt!r}")

    emit(program.statements, "")
    return "\n".join(lines) + "\n"


# phase validation and compilation ------------------------------------

_SETUP_OK = (Report, Define, Ref, OcbmWrite)
_EXEC_OK = (OcbmWrite, Loop, WaitFor, ExitOnCheck)


def validate_phases(program: NslProgram, filename: str = "<script>") -> None:
    """Enforce the setup / execution / reporting phase order."""
    phase = "setup"
    saw_start = saw_stop = False
    for stmt in program.statements:
        kind = type(stmt).__name__
        if phase == "setup":
            if isinstance(stmt, EthTxRxStart):
                phase = "execution"
                saw_start = True
            elif not isinstance(stmt, _SETUP_OK):
                raise NslCompileError(filename, stmt.line, stmt.col,
                                      f"{kind} not allowed before ETH_TXRX_START")
        elif phase == "execution":
            if isinstance(stmt, EthTxRxStop):
                phase = "reporting"
                saw_stop = True
            elif isinstance(stmt, EthTxRxStart):
                raise NslCompileError(filename, stmt.line, stmt.col,
                                      "second ETH_TXRX_START")
            elif not isinstance(stmt, _EXEC_OK):
                raise NslCompileError(filename, stmt.line, stmt.col,
                                      f"{kind} not allowed in the execution phase")
        else:
            if not isinstance(stmt, OcbmCheck):
                raise NslCompileError(filename, stmt.line, stmt.col,
                                      f"{kind} not allowed after ETH_TXRX_STOP")
    if not saw_start or not saw_stop:
        raise NslCompileError(filename, 1, 1,
                              "script must contain ETH_TXRX_START and ETH_TXRX_STOP")


def _loop_body_ok(body, filename: str) -> None:
    for stmt in body:
        if isinstance(stmt, Loop):
            _loop_body_ok(stmt.body, filename)
        elif not isinstance(stmt, (OcbmWrite, WaitFor, ExitOnCheck)):
            raise NslCompileError(filename, stmt.line, stmt.col,
                                  f"{type(stmt).__name__} not allowed inside LOOP")


class _Compiler:
    def __init__(self, filename: str):
        self.filename = filename
        self.env: dict[str, RegValue] = {}
        self.ops: list = []
        self.exit_targets: dict[int, int] = {}
        self.next_loop_id = 0

    def fail(self, stmt, message: str):
        raise NslCompileError(self.filename, stmt.line, stmt.col, message)

    def resolve(self, value, stmt) -> RegValue:
        if isinstance(value, Name):
            if value.text not in self.env:
                self.fail(stmt, f"undefined constant {value.text}")
            return self.env[value.text]
        return value

    def resolve_check(self, register_name: str, value, stmt) -> RegValue:
        """Expected values may use state names like DONE or RECEIVING."""
        if isinstance(value, Name):
            states = STATE_NAMES.get(register_name, {})
            if value.text in states:
                return states[value.text]
        return self.resolve(value, stmt)

    def register_target(self, stmt, port: str, register: str, writing: bool):
        if port not in PORTS:
            self.fail(stmt, f"unknown port {port} (expected one of {', '.join(PORTS)})")
        try:
            reg = resolve_register(register)
        except RegisterError as exc:
            self.fail(stmt, str(exc))
        if writing and reg.name in READ_ONLY:
            self.fail(stmt, f"register {reg.name} is read-only")
        return reg

    def checked(self, reg, value, stmt) -> RegValue:
        try:
            return check_value(reg, value)
        except RegisterError as exc:
            self.fail(stmt, str(exc))

    def emit_block(self, statements, loop_stack: list[int]) -> None:
        for stmt in statements:
            if isinstance(stmt, (Report, Ref)):
                continue
            if isinstance(stmt, Define):
                if stmt.name in self.env:
                    self.fail(stmt, f"constant {stmt.name} already defined")
                self.env[stmt.name] = self.resolve(stmt.value, stmt)
            elif isinstance(stmt, OcbmWrite):
                reg = self.register_target(stmt, stmt.port, stmt.register, writing=True)
                value = self.resolve(stmt.value, stmt)
                if isinstance(value, str):
                    value = value.encode("utf-8")
                self.ops.append(RegWrite(stmt.port, reg.name,
                                         self.checked(reg, value, stmt), stmt.line))
            elif isinstance(stmt, EthTxRxStart):
                self.ops.append(StartMarker(stmt.line))
            elif isinstance(stmt, EthTxRxStop):
                self.ops.append(StopMarker(stmt.line))
            elif isinstance(stmt, WaitFor):
                ticks = self.resolve(stmt.amount, stmt)
                if not isinstance(ticks, int) or ticks <= 0:
                    self.fail(stmt, f"WAIT_FOR needs a positive tick count, got {ticks!r}")
                self.ops.append(Delay(ticks, stmt.line))
            elif isinstance(stmt, Loop):
                count = self.resolve(stmt.count, stmt)
                if not isinstance(count, int) or count < 1:
                    self.fail(stmt, f"LOOP count must be a positive integer, got {count!r}")
                loop_id = self.next_loop_id
                self.next_loop_id += 1
                for _ in range(count):
                    if len(self.ops) > MAX_UNROLLED_OPS:
                        self.fail(stmt, "unrolled program exceeds "
                                        f"{MAX_UNROLLED_OPS} operations")
                    self.emit_block(stmt.body, loop_stack + [loop_id])
                self.exit_targets[loop_id] = len(self.ops)
            elif isinstance(stmt, ExitOnCheck):
                if not loop_stack:
                    self.fail(stmt, "EXITONCHECK outside LOOP")
                reg = self.register_target(stmt, stmt.port, stmt.register, writing=False)
                expected = self.resolve_check(reg.name, stmt.expected, stmt)
                if isinstance(expected, str):
                    expected = expected.encode("utf-8")
                self.ops.append(ExitCheck(stmt.port, reg.name,
                                          self.checked(reg, expected, stmt),
                                          loop_stack[-1], stmt.line))
            elif isinstance(stmt, OcbmCheck):
                reg = self.register_target(stmt, stmt.port, stmt.register, writing=False)
                expected = self.resolve_check(reg.name, stmt.expected, stmt)
                if isinstance(expected, str):
                    expected = expected.encode("utf-8")
                self.ops.append(FinalCheck(stmt.port, reg.name,
                                           self.checked(reg, expected, stmt), stmt.line))
            else:
                self.fail(stmt, f"cannot compile {type(stmt).__name__}")


def compile_program(program: NslProgram, filename: str = "<script>") -> RegisterProgram:
    """Lower a parsed script to a flat register program."""
    validate_phases(program, filename)
    for stmt in program.statements:
        if isinstance(stmt, Loop):
            _loop_body_ok(stmt.body, filename)
    comp = _Compiler(filename)
    comp.emit_block(program.statements, [])
    return RegisterProgram(
        ops=tuple(comp.ops),
        report=program.report,
        refs=program.refs,
        exit_targets=tuple(sorted(comp.exit_targets.items())),
    )


# load-script generation ----------------------------------------------

def _truncate(value: Fraction) -> Fraction:
    scale = 10**MAX_FRACTION_DIGITS
    return Fraction(value.numerator * scale // value.denominator, scale)


def generate_load_script(config: LoadConfig, port: str = "A") -> str:
    """Emit a complete three-phase script realizing a load job.

    The interframe gap is written in byte-times as an exact decimal,
    truncated to 9 fractional digits when the load fraction has no
    finite decimal form; the truncation understates the gap by less
    than a nanobyte-time per frame.
    """
    if port not in PORTS:
        raise ValueError(f"unknown port {port}")
    spec = config.spec
    s = frame_size(spec)
    if s < MIN_FRAME_SIZE:
        raise ValueError(f"frame size {s} below minimum {MIN_FRAME_SIZE}")
    load = Fraction(config.load)
    gap = Fraction(12) + (12 + s) * (1 - load) / load
    gap_text = format_decimal(_truncate(gap))
    pct = format_decimal(_truncate(load * 100))
    if spec.vlan is not None:
        hdr = (spec.vlan << 16) | spec.ethertype
    else:
        hdr = spec.ethertype
    wait = run_ticks(config)
    lines = [
        f'REPORT "Send {config.frames} frames of {s} bytes on-wire at {pct}% of '
        f'{config.rate} Mbit/s"',
        f'REF "load-{pct}pct-{config.rate}mbit"',
        f"DEFINE FRAMES {config.frames}",
        f"DEFINE GAP {gap_text}",
        f"OCBM_WRITE {port} DST_MAC {spec.dst}",
        f"OCBM_WRITE {port} SRC_MAC {spec.src}",
        f"OCBM_WRITE {port} HDR_AFTER_MAC 0x{hdr:04X}",
        f"OCBM_WRITE {port} PAYLOAD_SIZE {len(spec.payload)}",
        f"OCBM_WRITE {port} INTERFRAME_GAP GAP",
        f"OCBM_WRITE {port} NUMBER_OF_FRAMES FRAMES",
        f"OCBM_WRITE {port} START_DELAY 0",
        f"OCBM_WRITE {port} TR_CTRL 1",
        "ETH_TXRX_START",
        f"WAIT_FOR {wait} TICKS",
        "ETH_TXRX_STOP",
        f"OCBM_CHECK {port} TRANSMITTER_STATE DONE",
    ]
    return "\n".join(lines) + "\n"
