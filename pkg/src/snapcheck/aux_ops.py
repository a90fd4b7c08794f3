"""Atomic auxiliary transitions of the instrumented snapshot object.

Each function maps a pre-state satisfying its guard to a post-state; a guard
failure raises :class:`GuardViolationError` (the scheduler must never enable
a transition whose guard fails, so that is a harness bug, not a property of
the explored program).  All transitions are pure: they return fresh
:class:`AuxState` values and never mutate their input.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .aux_model import (
    AuxState,
    Color,
    HistEntry,
    OWNER_JOINT,
    OwnerKind,
    Ptr,
    ScannerState,
    Timestamp,
    Tid,
    Value,
    WRITER_OFF,
    WriteRecord,
    WriterPhase,
    WriterState,
    hist_p,
    last_gy,
    last_green,
    owner_thread,
    yellow_of,
    _positions,
)
from .errors import GuardViolationError, SnapshotModelError


@dataclass(frozen=True)
class InspectDecision:
    """Outcome of inspect: No, or Yes(ptr, target) naming the yellow write
    of ``ptr`` that must be pushed past the other pointer's chosen event."""

    ptr: Ptr | None = None
    target: Timestamp | None = None

    @property
    def is_yes(self) -> bool:
        return self.ptr is not None


INSPECT_NO = InspectDecision()


def _writer_field(p: Ptr) -> str:
    return "wx" if p is Ptr.X else "wy"


def _with_writer(aux: AuxState, p: Ptr, w: WriterState) -> AuxState:
    return aux.evolve(**{_writer_field(p): w})


def register(tid: Tid, p: Ptr, v: Value, aux: AuxState) -> tuple[AuxState, Timestamp]:
    """Create the write event: fresh timestamp, appended to sigma, joint-owned.

    The event is colored yellow when an active scan has already cleared p's
    forwarding cell (it may still observe this write), red otherwise.
    """
    w = aux.writer(p)
    if w.phase is not WriterPhase.OFF:
        raise GuardViolationError(f"register: writer for {p.value} is {w.phase.value}")
    t = aux.max_ts() + 1
    hist = dict(aux.hist)
    hist[t] = HistEntry(WriteRecord(p, v), OWNER_JOINT)
    kappa = dict(aux.kappa)
    if aux.scanner.on and aux.scanner.bit(p):
        kappa[t] = Color.YELLOW
    else:
        kappa[t] = Color.RED
    aux2 = aux.evolve(hist=hist, sigma=aux.sigma + (t,), kappa=kappa)
    return _with_writer(aux2, p, WriterState(WriterPhase.NEW, t, v)), t


def check(tid: Tid, p: Ptr, b: bool, aux: AuxState) -> AuxState:
    """Record the scanner-bit read: forwarding required iff b."""
    w = aux.writer(p)
    if w.phase is not WriterPhase.NEW:
        raise GuardViolationError(f"check: writer for {p.value} is {w.phase.value}")
    phase = WriterPhase.FWD if b else WriterPhase.DONE
    return _with_writer(aux, p, WriterState(phase, w.t, w.v))


def forward(tid: Tid, p: Ptr, aux: AuxState) -> AuxState:
    """Hand the value to the in-progress scan; greens the event while the
    scan is still guaranteed to observe it (scanner on, p's bit set)."""
    w = aux.writer(p)
    if w.phase is not WriterPhase.FWD:
        raise GuardViolationError(f"forward: writer for {p.value} is {w.phase.value}")
    aux2 = _with_writer(aux, p, WriterState(WriterPhase.DONE, w.t, w.v))
    if aux.scanner.on and aux.scanner.bit(p):
        kappa = dict(aux.kappa)
        kappa[w.t] = Color.GREEN
        aux2 = aux2.evolve(kappa=kappa)
    return aux2


def finalize(tid: Tid, p: Ptr, aux: AuxState) -> AuxState:
    """Terminate the write: move its event from joint to tid's self history
    and record the current largest timestamp as its end time."""
    w = aux.writer(p)
    if w.phase is not WriterPhase.DONE:
        raise GuardViolationError(f"finalize: writer for {p.value} is {w.phase.value}")
    entry = aux.hist.get(w.t)
    if (
        entry is None
        or entry.owner.kind is not OwnerKind.JOINT
        or entry.rec != WriteRecord(p, w.v)
    ):
        raise GuardViolationError(f"finalize: event {w.t} not joint-owned {p.value}={w.v}")
    hist = dict(aux.hist)
    hist[w.t] = HistEntry(entry.rec, owner_thread(tid))
    tau = dict(aux.tau)
    tau[w.t] = aux.max_ts()
    aux2 = aux.evolve(hist=hist, tau=tau)
    return _with_writer(aux2, p, WRITER_OFF)


def set_scanner(b: bool, aux: AuxState) -> AuxState:
    """Toggle the scanner phase; turning it off records the end-of-scan
    timestamp t_off as the largest timestamp in the history."""
    sc = aux.scanner
    if b:
        if sc.on or sc.sx or sc.sy:
            raise GuardViolationError("set(true): scanner already on or bits set")
        sc2 = ScannerState(on=True, t_off=None, sx=False, sy=False)
    else:
        if not sc.on or not (sc.sx and sc.sy):
            raise GuardViolationError("set(false): scanner off or bits unset")
        sc2 = ScannerState(on=False, t_off=aux.max_ts(), sx=True, sy=True)
    return aux.evolve(scanner=sc2)


def clear(p: Ptr, aux: AuxState) -> AuxState:
    """Mark the scan active for p and green p's whole subhistory: all its
    current writes are now observed (hence linearized) by this scan."""
    sc = aux.scanner
    if not sc.on or sc.bit(p):
        raise GuardViolationError(f"clear({p.value}): scanner off or bit already set")
    kappa = dict(aux.kappa)
    for t in hist_p(p, aux):
        kappa[t] = Color.GREEN
    field = "sx" if p is Ptr.X else "sy"
    return aux.evolve(kappa=kappa, scanner=replace(sc, **{field: True}))


def _require_relink_pre(t_x: Timestamp, t_y: Timestamp, aux: AuxState) -> None:
    sc = aux.scanner
    if sc.on or not (sc.sx and sc.sy):
        raise GuardViolationError("relink/inspect: scanner must be off with both bits set")
    if aux.hist[t_x].rec.ptr is not Ptr.X or aux.hist[t_y].rec.ptr is not Ptr.Y:
        raise GuardViolationError("relink/inspect: arguments write the wrong pointers")
    for p, t in ((Ptr.X, t_x), (Ptr.Y, t_y)):
        if not last_gy(p, t, aux):
            raise GuardViolationError(f"relink/inspect: {t} is not last-green-or-yellow of {p.value}")


def inspect(t_x: Timestamp, t_y: Timestamp, aux: AuxState) -> InspectDecision:
    """Decide whether (t_x, t_y) already form a valid snapshot.

    Returns Yes(p, s) when the sigma-earlier of the two is p's last green and
    p's yellow write s sits strictly between them (the scan missed s, so s
    must be pushed past the later event); No otherwise.
    """
    _require_relink_pre(t_x, t_y, aux)
    pos = _positions(aux.sigma)

    def offending(p: Ptr, tp: Timestamp, tq: Timestamp) -> Timestamp | None:
        if not pos[tp] < pos[tq]:
            return None
        if tp != last_green(p, aux):
            return None
        z = yellow_of(p, aux)
        if z is None or not pos[z] < pos[tq]:
            return None
        return z

    zx = offending(Ptr.X, t_x, t_y)
    zy = offending(Ptr.Y, t_y, t_x)
    if zx is not None and zy is not None:
        raise SnapshotModelError("inspect: X and Y reorder cases both apply")
    if zx is not None:
        return InspectDecision(Ptr.X, zx)
    if zy is not None:
        return InspectDecision(Ptr.Y, zy)
    return INSPECT_NO


def push(i: Timestamp, j: Timestamp, sigma: tuple[Timestamp, ...]) -> tuple[Timestamp, ...]:
    """Sequence surgery: move i to the position immediately after j."""
    if i not in sigma or j not in sigma:
        raise GuardViolationError(f"push: {i} or {j} absent from sigma")
    pi, pj = sigma.index(i), sigma.index(j)
    if pi >= pj:
        raise GuardViolationError(f"push: {i} is not strictly before {j}")
    out = list(sigma)
    out.pop(pi)
    out.insert(pj, i)  # j now sits at pj-1, so this lands right after it
    return tuple(out)


def relink(r_x: Value, r_y: Value, aux: AuxState) -> tuple[AuxState, Timestamp, Timestamp]:
    """Rearrange the logical order so (r_x, r_y) is a valid snapshot.

    Picks the events t_x, t_y that wrote the returned values (sigma-latest
    last-green-or-yellow candidates), pushes the offending yellow write, if
    any, past the other pointer's event, greens both, and retires the scan's
    per-pointer bits.  Returns the new state and the chosen (t_x, t_y).
    """
    sc = aux.scanner
    if sc.on or not (sc.sx and sc.sy):
        raise GuardViolationError("relink: scanner must be off with both bits set")

    def chosen(p: Ptr, value: Value) -> Timestamp:
        cands = [
            t
            for t in hist_p(p, aux)
            if aux.hist[t].rec.val == value and last_gy(p, t, aux)
        ]
        if not cands:
            raise GuardViolationError(f"relink: no last-green-or-yellow {p.value}-event with value {value}")
        return cands[-1]

    t_x = chosen(Ptr.X, r_x)
    t_y = chosen(Ptr.Y, r_y)
    d = inspect(t_x, t_y, aux)
    if d.ptr is Ptr.X:
        sigma = push(d.target, t_y, aux.sigma)
    elif d.ptr is Ptr.Y:
        sigma = push(d.target, t_x, aux.sigma)
    else:
        sigma = aux.sigma
    kappa = dict(aux.kappa)
    kappa[t_x] = Color.GREEN
    kappa[t_y] = Color.GREEN
    aux2 = aux.evolve(
        sigma=sigma,
        kappa=kappa,
        scanner=ScannerState(on=False, t_off=sc.t_off, sx=False, sy=False),
    )
    return aux2, t_x, t_y
