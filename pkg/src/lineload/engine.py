"""Discrete-event simulation of the register-level traffic device.

Four data ports (A to D) each carry a frame generator and a frame
analyser programmed through the symbolic registers in `registers`.
Port L is a monitor tap fed through a filter and a 4-frame buffer.

The timeline is integer 8 ns ticks; one byte on the wire is 10 ticks
at 100 Mbit/s and 1 tick at 1000 Mbit/s, so every event timestamp is
exact.  Event timestamps mark the start of the frame on the wire.
Determinism contract: identical inputs produce identical event lists,
with simultaneous events ordered by port (A<B<C<D<L), rx before tx.

Register writes configure hardware; a generator or analyser samples
its configuration when ETH_TXRX_START executes and keeps it for the
whole run.  Writing a generator register while that port is
transmitting is an error.  ETH_TXRX_STOP aborts transmission: frames
already started complete, the rest are discarded.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from . import frames as fm
from .frames import FrameError, MacAddress, WireBytes
from .loadmath import quantize_gaps, ticks_per_byte
from .registers import (
    MONITOR_PORT,
    PORTS,
    REGISTERS,
    AnalyserState,
    Delay,
    ExitCheck,
    FinalCheck,
    RegisterProgram,
    RegValue,
    RegWrite,
    StartMarker,
    StopMarker,
    TransmitterState,
)

_GENERATOR_REGS = frozenset((
    "TRANSMITTER_CONTROL", "INTERFRAME_GAP", "START_DELAY", "NUMBER_OF_FRAMES",
    "DST_MAC", "SRC_MAC", "HDR_AFTER_MAC", "PAYLOAD_SIZE",
))

_PORT_ORDER = {p: i for i, p in enumerate(PORTS + (MONITOR_PORT,))}
_SWITCH_PEER = {"A": "B", "B": "A", "C": "D", "D": "C"}


class EngineError(RuntimeError):
    """Invalid program behavior or malformed run input."""


class DeviceMode(Enum):
    TRANSPARENT = "transparent"
    SWITCHING = "switching"
    SCRIPTING = "scripting"


@dataclass(frozen=True, slots=True)
class WireEvent:
    """One frame crossing a port, timestamped in ticks at frame start."""

    timestamp: int
    port: str
    direction: str  # "tx" | "rx"
    frame: WireBytes
    port_tag: Optional[str] = None
    error_code: Optional[int] = None


def _event_key(event: WireEvent, seq: int) -> tuple:
    return (event.timestamp, _PORT_ORDER[event.port],
            0 if event.direction == "rx" else 1, seq)


class RegisterFile:
    """Per-port register values, keyed by canonical register name."""

    def __init__(self) -> None:
        self._regs: dict[str, dict[str, RegValue | None]] = {
            port: {name: spec.default for name, spec in REGISTERS.items()}
            for port in PORTS
        }

    def read(self, port: str, name: str) -> RegValue | None:
        if port not in PORTS:
            raise EngineError(f"unknown port {port}")
        if name not in REGISTERS:
            raise EngineError(f"unknown register {name}")
        return self._regs[port][name]

    def write(self, port: str, name: str, value: RegValue) -> None:
        if port not in PORTS:
            raise EngineError(f"unknown port {port}")
        if name not in REGISTERS:
            raise EngineError(f"unknown register {name}")
        self._regs[port][name] = value

    def snapshot(self) -> dict[str, dict[str, RegValue | None]]:
        return {port: dict(regs) for port, regs in self._regs.items()}


@dataclass(frozen=True)
class AnalyserRegs:
    """Analyser configuration and counters as one immutable snapshot."""

    state: AnalyserState = AnalyserState.DISABLED
    frames_exp: int = 0  # 0 = no limit
    frames_exp_ok: int = 0  # 0 = no limit
    recv_ok: int = 0
    recv_nok: int = 0
    error_code: int = 0
    match_dst: Optional[MacAddress] = None
    match_src: Optional[MacAddress] = None
    match_ethertype: Optional[int] = None
    match_payload: Optional[bytes] = None


def _frame_matches(regs: AnalyserRegs, event: WireEvent) -> bool:
    try:
        parsed = fm.parse(event.frame)
    except FrameError:
        return False
    if not parsed.fcs_ok:
        return False
    spec = parsed.spec
    if regs.match_dst is not None and spec.dst != regs.match_dst:
        return False
    if regs.match_src is not None and spec.src != regs.match_src:
        return False
    if regs.match_ethertype is not None and spec.ethertype != regs.match_ethertype:
        return False
    if regs.match_payload is not None and not spec.payload.startswith(regs.match_payload):
        return False
    return True


def analyser_feed(regs: AnalyserRegs, event: WireEvent) -> tuple[AnalyserRegs, WireEvent]:
    """Count one received frame; returns updated regs and the frame,
    error-tagged on mismatch when an error code is configured."""
    if regs.state != AnalyserState.RECEIVING:
        return regs, event
    if _frame_matches(regs, event):
        regs = replace(regs, recv_ok=regs.recv_ok + 1)
    else:
        regs = replace(regs, recv_nok=regs.recv_nok + 1)
        if regs.error_code:
            event = replace(event, error_code=regs.error_code)
    total = regs.recv_ok + regs.recv_nok
    if (regs.frames_exp and total >= regs.frames_exp) or (
        regs.frames_exp_ok and regs.recv_ok >= regs.frames_exp_ok
    ):
        regs = replace(regs, state=AnalyserState.HOLD)
    return regs, event


@dataclass(frozen=True)
class FilterRule:
    """Accept rule; a None field matches any value."""

    dst: Optional[MacAddress] = None
    src: Optional[MacAddress] = None
    ethertype: Optional[int] = None


@dataclass(frozen=True)
class MonitorConfig:
    filters: tuple[FilterRule, ...] = ()  # empty tuple accepts everything
    port_tagging: bool = False
    buffer_frames: int = 4


class Monitor:
    """Filter plus bounded store-and-forward buffer in front of port L.

    The tap drains one buffered frame per frame duration at line rate;
    a frame occupies its buffer slot until its forwarding (frame plus
    minimum gap) ends, and arrivals finding all slots busy are dropped.
    """

    def __init__(self, config: MonitorConfig, rate: int):
        self.config = config
        self._tpb = ticks_per_byte(rate)
        self._slot_free: list[int] = []  # forwarding end times of buffered frames
        self._line_free = 0
        self.drops = 0
        self.forwarded: list[WireEvent] = []

    def _accepts(self, event: WireEvent) -> bool:
        if not self.config.filters:
            return True
        try:
            parsed = fm.parse(event.frame)
        except FrameError:
            return False
        spec = parsed.spec
        for rule in self.config.filters:
            if rule.dst is not None and spec.dst != rule.dst:
                continue
            if rule.src is not None and spec.src != rule.src:
                continue
            if rule.ethertype is not None and spec.ethertype != rule.ethertype:
                continue
            return True
        return False

    def feed(self, event: WireEvent) -> Optional[WireEvent]:
        if not self._accepts(event):
            return None
        now = event.timestamp
        self._slot_free = [t for t in self._slot_free if t > now]
        if len(self._slot_free) >= self.config.buffer_frames:
            self.drops += 1
            return None
        start = max(now, self._line_free)
        busy = (event.frame.s_on_wire + fm.MIN_IFG_BYTES) * self._tpb
        end = start + busy
        self._slot_free.append(end)
        self._line_free = end
        out = replace(
            event,
            timestamp=start,
            port=MONITOR_PORT,
            direction="tx",
            port_tag=event.port if self.config.port_tagging else event.port_tag,
        )
        self.forwarded.append(out)
        return out


def monitor_feed(monitor: Monitor, event: WireEvent) -> tuple[Optional[WireEvent], int]:
    forwarded = monitor.feed(event)
    return forwarded, monitor.drops


@dataclass(frozen=True)
class CheckResult:
    port: str
    register: str
    expected: RegValue
    actual: RegValue | None
    passed: bool
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RunResult:
    events: tuple[WireEvent, ...]
    registers: RegisterFile
    checks: tuple[CheckResult, ...]
    warnings: tuple[str, ...]
    monitor_drops: int
    mode: DeviceMode
    rate: int
    done_ticks: int  # end of the last generator's final gap, 0 if none ran

    @property
    def checks_passed(self) -> bool:
        return all(check.passed for check in self.checks)


class _GeneratorRun:
    """Frame schedule of one port, fixed at ETH_TXRX_START."""

    def __init__(self, port: str, regs: RegisterFile, launch_base: int, tpb: int,
                 warnings: list[str]):
        self.port = port
        self.launch = launch_base + int(regs.read(port, "START_DELAY"))
        self.total = int(regs.read(port, "NUMBER_OF_FRAMES"))
        self.template = _frame_template(port, regs)
        self.s_bytes = len(self.template) + fm.PREAMBLE_BYTES + fm.SFD_BYTES
        self.s_ticks = self.s_bytes * tpb
        gap_bytes = Fraction(regs.read(port, "INTERFRAME_GAP"))
        gaps, clamped = quantize_gaps(gap_bytes * tpb, max(self.total, 1),
                                      fm.MIN_IFG_BYTES * tpb)
        if clamped:
            warnings.append(
                f"port {port}: interframe gap below {fm.MIN_IFG_BYTES} byte-times, clamped up"
            )
        self.starts: list[int] = []
        t = self.launch
        for k in range(self.total):
            self.starts.append(t)
            t += self.s_ticks + gaps[k]
        self.done = t  # end of the final gap
        self.frames_end = self.starts[-1] + self.s_ticks if self.starts else self.launch
        self.sent = self.total

    def truncate(self, stop: int) -> None:
        """Abort at the stop tick; frames already started still complete."""
        if self.done <= stop:
            return
        self.sent = bisect_right(self.starts, stop - 1)
        if self.sent:
            self.frames_end = self.starts[self.sent - 1] + self.s_ticks
            self.done = self.frames_end
        else:
            self.frames_end = stop
            self.done = stop
        del self.starts[self.sent:]

    def state(self, t: int) -> TransmitterState:
        # DONE once the final frame's bytes have left; the trailing
        # interframe gap still counts toward the run duration
        if t >= self.frames_end:
            return TransmitterState.DONE
        return TransmitterState.TRANSMITTING

    def events(self) -> list[WireEvent]:
        body = bytearray(self.template[: -fm.FCS_BYTES])
        off = self._stamp_offset
        stamp = off + 4 <= len(body)  # room for the 4-byte frame counter
        out = []
        for k, start in enumerate(self.starts):
            if stamp:
                body[off : off + 4] = (k & 0xFFFFFFFF).to_bytes(4, "big")
            data = bytes(body)
            data += fm.fcs(data)
            out.append(WireEvent(start, self.port, "tx",
                                 WireBytes(data, self.s_bytes)))
        return out

    @property
    def _stamp_offset(self) -> int:
        # payload begins after dst+src+ethertype, plus 4 for a VLAN tag
        if self.template[12:14] == fm.VLAN_TPID.to_bytes(2, "big"):
            return 18
        return 14


def _frame_template(port: str, regs: RegisterFile) -> bytes:
    hdr = int(regs.read(port, "HDR_AFTER_MAC"))
    if hdr < 1 << 16:
        ethertype, vlan = hdr, None
    else:
        vlan, ethertype = hdr >> 16, hdr & 0xFFFF
        if (vlan >> 16) != fm.VLAN_TPID:
            raise EngineError(
                f"port {port}: HDR_AFTER_MAC {hdr:#x} is not a VLAN tag + Ethertype"
            )
    payload_size = int(regs.read(port, "PAYLOAD_SIZE"))
    if payload_size > fm.MAX_PAYLOAD:
        raise EngineError(f"port {port}: PAYLOAD_SIZE {payload_size} exceeds {fm.MAX_PAYLOAD}")
    spec = fm.FrameSpec(
        dst=regs.read(port, "DST_MAC"),
        src=regs.read(port, "SRC_MAC"),
        payload=bytes(payload_size),
        ethertype=ethertype,
        vlan=vlan,
    )
    return fm.serialize(spec).data


class _AnalyserRun:
    """Analyser timeline for one port over its statically known rx stream.

    Only frames arriving at or after the begin tick are inspected;
    earlier and post-stop frames pass through uncounted and untagged.
    """

    def __init__(self, snapshot: AnalyserRegs, rx_events: list[WireEvent],
                 begin: int):
        self.all_events = rx_events
        self.skip = bisect_right([e.timestamp for e in rx_events], begin - 1)
        self.times: list[int] = []
        self.states: list[AnalyserRegs] = []
        self.tagged: list[WireEvent] = []
        regs = snapshot
        for event in rx_events[self.skip:]:
            regs, tagged = analyser_feed(regs, event)
            self.times.append(event.timestamp)
            self.states.append(regs)
            self.tagged.append(tagged)
        self.initial = snapshot
        self.cutoff: Optional[int] = None

    def regs_at(self, t: int) -> AnalyserRegs:
        if self.cutoff is not None:
            t = min(t, self.cutoff)
        idx = bisect_right(self.times, t)
        if idx == 0:
            return self.initial
        return self.states[idx - 1]

    def stop(self, t: int) -> AnalyserRegs:
        self.cutoff = t
        final = self.regs_at(t)
        if final.state == AnalyserState.RECEIVING:
            final = replace(final, state=AnalyserState.HOLD)
        return final

    def output_events(self) -> list[WireEvent]:
        """The port's rx stream with error tags where analysis added them."""
        idx = len(self.tagged)
        if self.cutoff is not None:
            idx = bisect_right(self.times, self.cutoff)
        return (self.all_events[: self.skip] + self.tagged[:idx]
                + self.all_events[self.skip + idx:])


def _analyser_snapshot(port: str, regs: RegisterFile) -> AnalyserRegs:
    return AnalyserRegs(
        state=AnalyserState.RECEIVING,
        frames_exp=int(regs.read(port, "FRAMES_EXP")),
        frames_exp_ok=int(regs.read(port, "FRAMES_EXP_OK")),
        error_code=int(regs.read(port, "ERROR_CODE")),
        match_dst=regs.read(port, "MATCH_DST"),
        match_src=regs.read(port, "MATCH_SRC"),
        match_ethertype=regs.read(port, "MATCH_ETHERTYPE"),
        match_payload=regs.read(port, "MATCH_PAYLOAD"),
    )


def _check_external(external_rx: Sequence[WireEvent]) -> list[WireEvent]:
    events = []
    for event in external_rx:
        if event.port not in PORTS:
            raise EngineError(f"external event on unknown port {event.port}")
        if event.direction != "rx":
            raise EngineError("external events must have direction 'rx'")
        if event.timestamp < 0:
            raise EngineError("external event before tick 0")
        events.append(event)
    events.sort(key=lambda e: (e.timestamp, _PORT_ORDER[e.port]))
    return events


class _ScriptRun:
    def __init__(self, program: RegisterProgram, rate: int,
                 external_rx: list[WireEvent]):
        self.program = program
        self.rate = rate
        self.tpb = ticks_per_byte(rate)
        self.registers = RegisterFile()
        self.rx_by_port: dict[str, list[WireEvent]] = {p: [] for p in PORTS}
        for event in external_rx:
            self.rx_by_port[event.port].append(event)
        self.generators: dict[str, _GeneratorRun] = {}
        self.analysers: dict[str, _AnalyserRun] = {}
        self.warnings: list[str] = []
        self.checks: list[CheckResult] = []
        self.started_at: Optional[int] = None
        self.stopped_at: Optional[int] = None
        self.time = 0

    def execute(self) -> None:
        exit_targets = dict(self.program.exit_targets)
        ops = self.program.ops
        i = 0
        while i < len(ops):
            op = ops[i]
            if isinstance(op, RegWrite):
                self._write(op)
            elif isinstance(op, Delay):
                self.time += op.ticks
            elif isinstance(op, StartMarker):
                self._start()
            elif isinstance(op, StopMarker):
                self._stop()
            elif isinstance(op, ExitCheck):
                passed, _ = self._evaluate(op.port, op.register, op.expected)
                if passed:
                    i = exit_targets[op.loop_id]
                    continue
            elif isinstance(op, FinalCheck):
                passed, actual = self._evaluate(op.port, op.register, op.expected)
                self.checks.append(CheckResult(op.port, op.register, op.expected,
                                               actual, passed, op.line))
            else:
                raise EngineError(f"unknown operation {op!r}")
            i += 1
        if self.started_at is not None and self.stopped_at is None:
            self._stop()

    def _write(self, op: RegWrite) -> None:
        running = self.generators.get(op.port)
        if op.register in _GENERATOR_REGS and running is not None:
            if running.state(self.time) == TransmitterState.TRANSMITTING:
                raise EngineError(
                    f"line {op.line}: write to {op.register} while port "
                    f"{op.port} is transmitting"
                )
            if op.register == "TRANSMITTER_CONTROL" and op.value == 1:
                raise EngineError(
                    f"line {op.line}: generator on port {op.port} already ran"
                )
        self.registers.write(op.port, op.register, op.value)
        if (op.register == "TRANSMITTER_CONTROL" and op.value == 1
                and self.started_at is not None and running is None):
            self._launch_generator(op.port, self.time)
        if (op.register == "ANALYSER_CONTROL" and op.value == 1
                and self.started_at is not None and op.port not in self.analysers):
            self._launch_analyser(op.port)

    def _launch_generator(self, port: str, base: int) -> None:
        if int(self.registers.read(port, "NUMBER_OF_FRAMES")) < 1:
            return
        self.generators[port] = _GeneratorRun(port, self.registers, base,
                                              self.tpb, self.warnings)

    def _launch_analyser(self, port: str) -> None:
        snapshot = _analyser_snapshot(port, self.registers)
        self.analysers[port] = _AnalyserRun(snapshot, self.rx_by_port[port],
                                            self.time)

    def _start(self) -> None:
        if self.started_at is not None:
            raise EngineError("second ETH_TXRX_START")
        self.started_at = self.time
        for port in PORTS:
            if self.registers.read(port, "TRANSMITTER_CONTROL") == 1:
                self._launch_generator(port, self.time)
            if self.registers.read(port, "ANALYSER_CONTROL") == 1:
                self._launch_analyser(port)

    def _stop(self) -> None:
        if self.stopped_at is not None:
            raise EngineError("second ETH_TXRX_STOP")
        self.stopped_at = self.time
        for gen in self.generators.values():
            gen.truncate(self.time)
        for analyser in self.analysers.values():
            analyser.stop(self.time)

    def _evaluate(self, port: str, register: str, expected: RegValue
                  ) -> tuple[bool, RegValue | None]:
        actual = self._read(port, register)
        return actual == expected, actual

    def _read(self, port: str, register: str) -> RegValue | None:
        t = self.time
        if register == "TRANSMITTER_STATE":
            gen = self.generators.get(port)
            if gen is None:
                return int(TransmitterState.DISABLED)
            return int(gen.state(t))
        if register in ("ANALYSER_STATE", "NUMBER_OF_RECV_OK", "NUMBER_OF_RECV_NOK"):
            run = self.analysers.get(port)
            if run is None:
                if register == "ANALYSER_STATE":
                    return int(AnalyserState.DISABLED)
                return 0
            regs = run.regs_at(t)
            if register == "ANALYSER_STATE":
                return int(regs.state)
            if register == "NUMBER_OF_RECV_OK":
                return regs.recv_ok
            return regs.recv_nok
        return self.registers.read(port, register)

    def finalize_registers(self) -> None:
        for port in PORTS:
            gen = self.generators.get(port)
            if gen is not None:
                self.registers.write(port, "TRANSMITTER_STATE",
                                     int(gen.state(self.time)))
            run = self.analysers.get(port)
            if run is not None:
                regs = run.regs_at(self.time)
                self.registers.write(port, "ANALYSER_STATE", int(regs.state))
                self.registers.write(port, "NUMBER_OF_RECV_OK", regs.recv_ok)
                self.registers.write(port, "NUMBER_OF_RECV_NOK", regs.recv_nok)


def run(
    program: Optional[RegisterProgram] = None,
    mode: DeviceMode = DeviceMode.SCRIPTING,
    *,
    rate: int = 100,
    external_rx: Sequence[WireEvent] = (),
    monitor: Optional[MonitorConfig] = None,
) -> RunResult:
    """Execute one deterministic device run and return its event list."""
    tpb = ticks_per_byte(rate)
    rx_events = _check_external(external_rx)

    if mode == DeviceMode.SCRIPTING:
        if program is None:
            raise EngineError("Scripting mode needs a compiled program")
        script = _ScriptRun(program, rate, rx_events)
        script.execute()
        script.finalize_registers()
        tx_events: list[WireEvent] = []
        for port in PORTS:
            gen = script.generators.get(port)
            if gen is not None:
                tx_events.extend(gen.events())
        rx_after_analysis: list[WireEvent] = []
        for port in PORTS:
            analyser = script.analysers.get(port)
            if analyser is None:
                rx_after_analysis.extend(script.rx_by_port[port])
            else:
                rx_after_analysis.extend(analyser.output_events())
        registers = script.registers
        checks = tuple(script.checks)
        warnings = list(script.warnings)
        done = max((g.done for g in script.generators.values()), default=0)
        port_events = tx_events + rx_after_analysis
    elif program is not None:
        raise EngineError("scripts only run in Scripting mode")
    else:
        registers = RegisterFile()
        checks = ()
        warnings = []
        done = 0
        if mode == DeviceMode.SWITCHING:
            bridged: list[WireEvent] = []
            next_free = {p: 0 for p in PORTS}
            for event in rx_events:
                peer = _SWITCH_PEER[event.port]
                s_wire = event.frame.s_on_wire
                start = max(event.timestamp + s_wire * tpb, next_free[peer])
                next_free[peer] = start + (s_wire + fm.MIN_IFG_BYTES) * tpb
                bridged.append(replace(event, timestamp=start, port=peer,
                                       direction="tx"))
            port_events = list(rx_events) + bridged
        elif mode == DeviceMode.TRANSPARENT:
            if monitor is None:
                monitor = MonitorConfig()
            port_events = list(rx_events)
        else:
            raise EngineError(f"unknown mode {mode!r}")

    drops = 0
    monitor_events: list[WireEvent] = []
    if monitor is not None:
        tap = Monitor(monitor, rate)
        ordered = sorted(enumerate(port_events),
                         key=lambda pair: _event_key(pair[1], pair[0]))
        for _, event in ordered:
            forwarded = tap.feed(event)
            if forwarded is not None:
                monitor_events.append(forwarded)
        drops = tap.drops

    all_events = port_events + monitor_events
    all_events = [e for _, e in sorted(enumerate(all_events),
                                       key=lambda pair: _event_key(pair[1], pair[0]))]
    return RunResult(
        events=tuple(all_events),
        registers=registers,
        checks=checks,
        warnings=tuple(warnings),
        monitor_drops=drops,
        mode=mode,
        rate=rate,
        done_ticks=done,
    )
