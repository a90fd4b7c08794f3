"""The instrumented snapshot algorithm: physical memory plus lock discipline.

A write stores into its pointer and, if it saw the scanner bit set, also into
the pointer's forwarding cell; a scan sets the bit, clears both forwarding
cells, reads both pointers, unsets the bit, then reads the forwarding cells
and prefers forwarded values.  Each angle-bracket command of the algorithm is
one :class:`Step` that performs its physical action and its auxiliary
transition as a single indivisible state change; lock acquire/release are
explicit schedulable steps of their own.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from . import aux_ops, invariants
from .aux_model import (
    AuxState,
    Color,
    DEFAULT_VALUE_RANGE,
    HistEntry,
    OWNER_INIT,
    Ptr,
    ScannerState,
    Tid,
    Timestamp,
    Value,
    WRITER_OFF,
    WriteRecord,
    aux_key,
    validate_value,
)
from .errors import DisabledStepError, GuardViolationError

LOCK_WX = "wx"
LOCK_WY = "wy"
LOCK_SCAN = "scan"


def lock_for(p: Ptr) -> str:
    return LOCK_WX if p is Ptr.X else LOCK_WY


@dataclass(frozen=True)
class PhysState:
    x: Value
    y: Value
    fx: Value | None
    fy: Value | None
    s_bit: bool
    lock_wx: Tid | None = None
    lock_wy: Tid | None = None
    lock_scan: Tid | None = None

    def holder(self, lock: str) -> Tid | None:
        return getattr(self, "lock_" + lock)

    def evolve(self, **kw) -> "PhysState":
        new = object.__new__(PhysState)
        new.__dict__.update(self.__dict__)
        new.__dict__.update(kw)
        return new

    def with_holder(self, lock: str, tid: Tid | None) -> "PhysState":
        return self.evolve(**{"lock_" + lock: tid})


@dataclass(frozen=True)
class MethodCall:
    kind: str  # "write" | "scan"
    p: Ptr | None = None
    v: Value | None = None

    def render(self) -> str:
        if self.kind == "scan":
            return "scan"
        return f"write {self.p.value} {self.v}"

    @staticmethod
    def write(p: Ptr, v: Value) -> "MethodCall":
        return MethodCall("write", p, v)

    @staticmethod
    def scan() -> "MethodCall":
        return MethodCall("scan")

    @staticmethod
    def parse(text: str) -> "MethodCall":
        parts = text.split()
        if parts == ["scan"]:
            return MethodCall.scan()
        if len(parts) == 3 and parts[0] == "write" and parts[1] in ("x", "y"):
            return MethodCall.write(Ptr(parts[1]), int(parts[2]))
        raise ValueError(f"bad method call: {text!r}")


@dataclass(frozen=True)
class Step:
    kind: str
    label: str
    ptr: Ptr | None = None
    lock: str | None = None


def _step(kind: str, ptr: Ptr | None = None, lock: str | None = None) -> Step:
    if lock is not None:
        label = f"{kind}:{lock}"
    elif ptr is not None:
        label = f"{kind}:{ptr.value}"
    else:
        label = kind
    return Step(kind, label, ptr, lock)


def _write_step_list(p: Ptr) -> tuple[Step, ...]:
    lock = lock_for(p)
    return (
        _step("acquire", lock=lock),
        _step("register", ptr=p),
        _step("check", ptr=p),
        _step("forward", ptr=p),
        _step("finalize", ptr=p),
        _step("release", lock=lock),
    )


_WRITE_STEPS = {Ptr.X: _write_step_list(Ptr.X), Ptr.Y: _write_step_list(Ptr.Y)}

_SCAN_STEPS = (
    _step("acquire", lock=LOCK_SCAN),
    _step("set-on"),
    _step("clear", ptr=Ptr.X),
    _step("clear", ptr=Ptr.Y),
    _step("read", ptr=Ptr.X),
    _step("read", ptr=Ptr.Y),
    _step("set-off"),
    _step("read-fwd", ptr=Ptr.X),
    _step("read-fwd", ptr=Ptr.Y),
    _step("relink"),
    _step("release", lock=LOCK_SCAN),
)


def write_steps(tid: Tid, p: Ptr, v: Value) -> tuple[Step, ...]:
    """Step list of write(p, v); the forward step is skipped at run time
    when the scanner bit was read as false."""
    return _WRITE_STEPS[p]


def scan_steps(tid: Tid) -> tuple[Step, ...]:
    """Step list of scan(); the local rx/ry selection is folded into the
    relink step since it touches no shared state."""
    return _SCAN_STEPS


@dataclass(frozen=True)
class MethodFrame:
    """One in-flight method call: program counter over its step list, local
    registers, and the pre-state snapshot its postcondition is checked
    against."""

    tid: Tid
    call: MethodCall
    steps: tuple[Step, ...]
    snapshot: invariants.SpecSnapshot
    pc: int = 0
    b: bool | None = None
    t: Timestamp | None = None
    vx: Value | None = None
    vy: Value | None = None
    ox: Value | None = None
    oy: Value | None = None
    rx: Value | None = None
    ry: Value | None = None
    witness_x: Timestamp | None = None
    witness_y: Timestamp | None = None
    result: tuple[Value, Value] | None = None
    returned: bool = False

    @property
    def done(self) -> bool:
        return self.pc >= len(self.steps)

    def current_step(self) -> Step:
        return self.steps[self.pc]

    def evolve(self, **kw) -> "MethodFrame":
        new = object.__new__(MethodFrame)
        d = self.__dict__.copy()
        d.pop("_key_cache", None)
        d.update(kw)
        new.__dict__.update(d)
        return new

    def key(self) -> tuple:
        """Canonical identity, restricted to data some future step or check
        will still read.

        Dead locals are excluded so that states differing only in consumed
        registers merge during exploration: a write's b and t mirror the
        writer phase / die at its return, scan locals die at relink, and of
        the pre-state snapshot only what the return check consumes is kept
        (the write check reads the other+scanned union, the scan check the
        global domain; freshness cannot depend on the rest).  Once a pointer
        read has been superseded by a forwarded value the read is dead too.
        """
        cached = getattr(self, "_key_cache", None)
        if cached is not None:
            return cached
        call = self.call
        base = (self.tid, call.kind, call.p.value if call.p else None, call.v, self.pc)
        if self.returned:
            key = base
        elif call.kind == "write":
            snap = self.snapshot
            key = base + (tuple(sorted(snap.dom_other | snap.scanned_set)),)
        else:
            rx = self.ox if self.ox is not None else (("v", self.vx) if self.pc > 7 else None)
            ry = self.oy if self.oy is not None else (("v", self.vy) if self.pc > 8 else None)
            key = base + (
                rx,
                ry,
                self.vx if self.pc <= 7 else None,
                self.vy if self.pc <= 8 else None,
                tuple(sorted(self.snapshot.dom_global)),
            )
        object.__setattr__(self, "_key_cache", key)
        return key


def make_frame(tid: Tid, call: MethodCall, aux: AuxState) -> MethodFrame:
    """Create the frame at invocation, capturing the pre-state snapshot."""
    if call.kind == "write":
        steps = write_steps(tid, call.p, call.v)
    else:
        steps = scan_steps(tid)
    return MethodFrame(tid, call, steps, invariants.capture_spec_snapshot(aux, tid))


def step_enabled(step: Step, phys: PhysState) -> bool:
    if step.kind == "acquire":
        return phys.holder(step.lock) is None
    return True


def apply_step(
    step: Step, phys: PhysState, aux: AuxState, frame: MethodFrame
) -> tuple[PhysState, AuxState, MethodFrame]:
    """Execute one atomic step: physical action and auxiliary transition
    commit together; the frame's program counter advances."""
    tid = frame.tid
    kind = step.kind
    p = step.ptr
    nxt = frame.pc + 1

    if kind == "acquire":
        if phys.holder(step.lock) is not None:
            raise DisabledStepError(f"{tid}: lock {step.lock} held by {phys.holder(step.lock)}")
        return phys.with_holder(step.lock, tid), aux, frame.evolve(pc=nxt)

    if kind == "release":
        if phys.holder(step.lock) != tid:
            raise GuardViolationError(f"{tid}: releasing lock {step.lock} it does not hold")
        return phys.with_holder(step.lock, None), aux, frame.evolve(pc=nxt)

    if kind == "register":
        v = frame.call.v
        phys2 = phys.evolve(**{p.value: v})
        aux2, t = aux_ops.register(tid, p, v, aux)
        return phys2, aux2, frame.evolve(pc=nxt, t=t)

    if kind == "check":
        b = phys.s_bit
        aux2 = aux_ops.check(tid, p, b, aux)
        # skip the forward step entirely when no scan was in progress
        return phys, aux2, frame.evolve(pc=nxt if b else nxt + 1, b=b)

    if kind == "forward":
        v = frame.call.v
        phys2 = phys.evolve(**{"fx" if p is Ptr.X else "fy": v})
        return phys2, aux_ops.forward(tid, p, aux), frame.evolve(pc=nxt)

    if kind == "finalize":
        aux2 = aux_ops.finalize(tid, p, aux)
        return phys, aux2, frame.evolve(pc=nxt, returned=True)

    if kind == "set-on":
        return phys.evolve(s_bit=True), aux_ops.set_scanner(True, aux), frame.evolve(pc=nxt)

    if kind == "set-off":
        return phys.evolve(s_bit=False), aux_ops.set_scanner(False, aux), frame.evolve(pc=nxt)

    if kind == "clear":
        phys2 = phys.evolve(**{"fx" if p is Ptr.X else "fy": None})
        return phys2, aux_ops.clear(p, aux), frame.evolve(pc=nxt)

    if kind == "read":
        field = "vx" if p is Ptr.X else "vy"
        value = phys.x if p is Ptr.X else phys.y
        return phys, aux, frame.evolve(pc=nxt, **{field: value})

    if kind == "read-fwd":
        field = "ox" if p is Ptr.X else "oy"
        value = phys.fx if p is Ptr.X else phys.fy
        return phys, aux, frame.evolve(pc=nxt, **{field: value})

    if kind == "relink":
        rx = frame.ox if frame.ox is not None else frame.vx
        ry = frame.oy if frame.oy is not None else frame.vy
        aux2, t_x, t_y = aux_ops.relink(rx, ry, aux)
        frame2 = frame.evolve(
            pc=nxt,
            rx=rx,
            ry=ry,
            witness_x=t_x,
            witness_y=t_y,
            result=(rx, ry),
            returned=True,
        )
        return phys, aux2, frame2

    raise GuardViolationError(f"unknown step kind {kind!r}")


def init(
    v_x: Value, v_y: Value, value_range: tuple[int, int] = DEFAULT_VALUE_RANGE
) -> tuple[PhysState, AuxState]:
    """Fresh object: both pointers initialized by green, already-terminated
    events 1 and 2, forwarding cells empty, all locks free."""
    validate_value(v_x, value_range)
    validate_value(v_y, value_range)
    phys = PhysState(x=v_x, y=v_y, fx=None, fy=None, s_bit=False)
    aux = AuxState(
        hist={
            1: HistEntry(WriteRecord(Ptr.X, v_x), OWNER_INIT),
            2: HistEntry(WriteRecord(Ptr.Y, v_y), OWNER_INIT),
        },
        sigma=(1, 2),
        kappa={1: Color.GREEN, 2: Color.GREEN},
        tau={1: 2, 2: 2},
        wx=WRITER_OFF,
        wy=WRITER_OFF,
        scanner=ScannerState(on=False, t_off=2, sx=False, sy=False),
    )
    return phys, aux


def phys_key(phys: PhysState) -> tuple:
    return (
        phys.x,
        phys.y,
        phys.fx,
        phys.fy,
        phys.s_bit,
        phys.lock_wx,
        phys.lock_wy,
        phys.lock_scan,
    )


def digest64(key: tuple) -> str:
    """Stable 64-bit hex digest of a canonical key tuple."""
    return hashlib.blake2b(repr(key).encode(), digest_size=8).hexdigest()


def phys_digest(phys: PhysState) -> str:
    return digest64(phys_key(phys))


def aux_digest(aux: AuxState) -> str:
    from .aux_model import _derived

    cache = _derived(aux)
    d = cache.get("digest")
    if d is None:
        d = cache["digest"] = digest64(aux_key(aux))
    return d
