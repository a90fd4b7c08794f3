"""Value-level model of the instrumented snapshot object's auxiliary state.

Every write is a timestamped event ``t -> (pointer, value)`` carrying an
ownership tag: an initializing event, an in-progress *joint* event, or an
event finished by a particular thread.  On top of the event history the model
keeps

* ``sigma``   -- the mutable logical order, a permutation of all timestamps;
* ``kappa``   -- a color per event: green (logical position fixed forever),
  yellow (may still be moved by the active scan), red (left to a future scan);
* ``tau``     -- end times of finished events, used to tell overlapping
  events from non-overlapping ones;
* writer and scanner phase trackers mirroring where each method is.

From these the stable order (``omega_leq``), the set of already-linearized
timestamps (``scanned``) and the replay evaluation (``eval_at``) are derived.
Everything in this module is a pure function over immutable values; the
atomic transitions that evolve the state live in ``aux_ops``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import UninitializedPointerError, UnknownTimestampError, ValueDomainError

Timestamp = int
Value = int
Tid = str

DEFAULT_VALUE_RANGE: tuple[int, int] = (0, 7)


class Ptr(Enum):
    X = "x"
    Y = "y"

    def other(self) -> "Ptr":
        return Ptr.Y if self is Ptr.X else Ptr.X


class Color(Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


class OwnerKind(Enum):
    INIT = "init"
    JOINT = "joint"
    THREAD = "thread"


@dataclass(frozen=True)
class Owner:
    kind: OwnerKind
    tid: Tid | None = None


OWNER_INIT = Owner(OwnerKind.INIT)
OWNER_JOINT = Owner(OwnerKind.JOINT)


def owner_thread(tid: Tid) -> Owner:
    return Owner(OwnerKind.THREAD, tid)


@dataclass(frozen=True)
class WriteRecord:
    ptr: Ptr
    val: Value


@dataclass(frozen=True)
class HistEntry:
    rec: WriteRecord
    owner: Owner


class WriterPhase(Enum):
    OFF = "off"
    NEW = "new"
    FWD = "fwd"
    DONE = "done"


@dataclass(frozen=True)
class WriterState:
    """Phase of the (single) writer for one pointer.

    Outside OFF, ``t``/``v`` are the timestamp and value of the write in
    progress; the corresponding event is always in the joint history.
    """

    phase: WriterPhase
    t: Timestamp | None = None
    v: Value | None = None


WRITER_OFF = WriterState(WriterPhase.OFF)


@dataclass(frozen=True)
class ScannerState:
    """Scanner phase: ``on`` between its set(true)/set(false) toggles.

    ``t_off`` is the largest timestamp at the moment the scanner bit was
    last unset (the scan's classical linearization moment).  ``sx``/``sy``
    are set while a scan is between its clear of the pointer's forwarding
    cell and its relink.
    """

    on: bool
    t_off: Timestamp | None
    sx: bool
    sy: bool

    def bit(self, p: Ptr) -> bool:
        return self.sx if p is Ptr.X else self.sy


@dataclass(frozen=True)
class AuxState:
    hist: Mapping[Timestamp, HistEntry]
    sigma: tuple[Timestamp, ...]
    kappa: Mapping[Timestamp, Color]
    tau: Mapping[Timestamp, Timestamp]
    wx: WriterState
    wy: WriterState
    scanner: ScannerState

    def writer(self, p: Ptr) -> WriterState:
        return self.wx if p is Ptr.X else self.wy

    def max_ts(self) -> Timestamp:
        return max(self.hist)

    def evolve(self, **kw) -> "AuxState":
        # fast functional update (dataclasses.replace is hot-path slow);
        # the derived-data memo must not carry over
        new = object.__new__(AuxState)
        d = self.__dict__.copy()
        d.pop("_derived_cache", None)
        d.update(kw)
        new.__dict__.update(d)
        return new


def validate_value(v: Value, value_range: tuple[int, int] = DEFAULT_VALUE_RANGE) -> None:
    lo, hi = value_range
    if not (isinstance(v, int) and lo <= v <= hi):
        raise ValueDomainError(f"value {v!r} outside domain {lo}..{hi}")


def _derived(aux: AuxState) -> dict:
    # per-instance memo for derived data; AuxState values are immutable so
    # this never goes stale (not a dataclass field: invisible to eq/repr)
    d = aux.__dict__
    cache = d.get("_derived_cache")
    if cache is None:
        cache = d["_derived_cache"] = {}
    return cache


def _positions(sigma: tuple[Timestamp, ...]) -> dict[Timestamp, int]:
    return {t: i for i, t in enumerate(sigma)}


def _positions_of(aux: AuxState) -> dict[Timestamp, int]:
    cache = _derived(aux)
    pos = cache.get("pos")
    if pos is None:
        pos = cache["pos"] = _positions(aux.sigma)
    return pos


def _require_known(aux: AuxState, *ts: Timestamp) -> None:
    for t in ts:
        if t not in aux.hist:
            raise UnknownTimestampError(f"timestamp {t} not in history")


def _leq(t1, t2, pos, kappa, tau) -> bool:
    # the three clauses of the stable-order definition
    if t1 == t2:
        return True
    end = tau.get(t1)
    if end is not None and end < t2:
        return True
    return kappa[t1] is Color.GREEN and pos[t1] < pos[t2]


def _ideals(aux: AuxState) -> dict[Timestamp, frozenset[Timestamp]]:
    """Stable-order ideal of every timestamp, computed once per state."""
    cache = _derived(aux)
    ideals = cache.get("ideals")
    if ideals is None:
        pos = _positions_of(aux)
        kappa, tau, dom = aux.kappa, aux.tau, aux.sigma
        ideals = {
            t: frozenset(s for s in dom if _leq(s, t, pos, kappa, tau)) for t in dom
        }
        cache["ideals"] = ideals
    return ideals


def _ideal_masks(aux: AuxState) -> dict[Timestamp, int]:
    """Ideals as integer bitmasks (bit t set iff t is in the ideal)."""
    cache = _derived(aux)
    masks = cache.get("masks")
    if masks is None:
        masks = {
            t: sum(1 << s for s in ideal) for t, ideal in _ideals(aux).items()
        }
        cache["masks"] = masks
    return masks


def scanned_mask(aux: AuxState) -> int:
    cache = _derived(aux)
    m = cache.get("scanned_mask")
    if m is None:
        m = cache["scanned_mask"] = sum(1 << t for t in scanned(aux))
    return m


def owner_masks(aux: AuxState) -> tuple[int, dict[Tid, int]]:
    """(init-owned mask, per-thread self-owned masks)."""
    cache = _derived(aux)
    got = cache.get("owner_masks")
    if got is None:
        init_mask = 0
        self_masks: dict[Tid, int] = {}
        for t, e in aux.hist.items():
            if e.owner.kind is OwnerKind.INIT:
                init_mask |= 1 << t
            elif e.owner.kind is OwnerKind.THREAD:
                self_masks[e.owner.tid] = self_masks.get(e.owner.tid, 0) | (1 << t)
        got = cache["owner_masks"] = (init_mask, self_masks)
    return got


def omega_leq(t1: Timestamp, t2: Timestamp, aux: AuxState) -> bool:
    """Stable-order test: t1 is (and will remain) logically at or before t2.

    Holds iff t1 = t2, or t1 ended before t2 began in real time, or t1 is
    green and sigma currently orders it before t2.
    """
    _require_known(aux, t1, t2)
    return _leq(t1, t2, _positions_of(aux), aux.kappa, aux.tau)


def omega_pairs(aux: AuxState) -> frozenset[tuple[Timestamp, Timestamp]]:
    """All related pairs of the stable order, reflexive pairs included."""
    cache = _derived(aux)
    pairs = cache.get("pairs")
    if pairs is None:
        pairs = frozenset(
            (s, t) for t, ideal in _ideals(aux).items() for s in ideal
        )
        cache["pairs"] = pairs
    return pairs


def omega_down(t: Timestamp, aux: AuxState, strict: bool = False) -> frozenset[Timestamp]:
    """The stable-order ideal of t: every s with s at-or-below t (strict drops t)."""
    _require_known(aux, t)
    ideal = _ideals(aux)[t]
    if strict:
        return ideal - {t}
    return ideal


def scanned(aux: AuxState) -> frozenset[Timestamp]:
    """Timestamps already observed by some scan.

    t qualifies when its stable-order ideal equals its sigma-prefix and that
    prefix is entirely green; such timestamps are linearized for good.
    """
    cache = _derived(aux)
    out = cache.get("scanned")
    if out is None:
        acc = []
        ideals = _ideals(aux)
        prefix: set[Timestamp] = set()
        all_green = True
        for t in aux.sigma:
            prefix.add(t)
            all_green = all_green and aux.kappa[t] is Color.GREEN
            if not all_green:
                break
            if ideals[t] == prefix:
                acc.append(t)
        out = cache["scanned"] = frozenset(acc)
    return out


def eval_at(
    t: Timestamp,
    sigma: tuple[Timestamp, ...],
    hist: Mapping[Timestamp, HistEntry],
) -> tuple[Value, Value]:
    """Replay writes in sigma order up to and including t; return (x, y)."""
    if t not in hist:
        raise UnknownTimestampError(f"timestamp {t} not in history")
    x: Value | None = None
    y: Value | None = None
    for s in sigma:
        rec = hist[s].rec
        if rec.ptr is Ptr.X:
            x = rec.val
        else:
            y = rec.val
        if s == t:
            break
    if x is None or y is None:
        missing = "x" if x is None else "y"
        raise UninitializedPointerError(f"no write to {missing} at or before {t}")
    return (x, y)


def hist_p(p: Ptr, aux: AuxState) -> tuple[Timestamp, ...]:
    """The subsequence of sigma writing to p, in sigma order."""
    cache = _derived(aux)
    key = "hist_" + p.value
    seq = cache.get(key)
    if seq is None:
        seq = cache[key] = tuple(t for t in aux.sigma if aux.hist[t].rec.ptr is p)
    return seq


def last_green(p: Ptr, aux: AuxState) -> Timestamp | None:
    """The sigma-last green timestamp among p's writes, if any."""
    cache = _derived(aux)
    key = "lastgreen_" + p.value
    if key not in cache:
        out = None
        for t in hist_p(p, aux):
            if aux.kappa[t] is Color.GREEN:
                out = t
        cache[key] = out
    return cache[key]


def yellow_of(p: Ptr, aux: AuxState) -> Timestamp | None:
    """The (in valid states unique) yellow timestamp among p's writes."""
    cache = _derived(aux)
    key = "yellow_" + p.value
    if key not in cache:
        out = None
        for t in hist_p(p, aux):
            if aux.kappa[t] is Color.YELLOW:
                out = t
        cache[key] = out
    return cache[key]


def last_gy(p: Ptr, t: Timestamp, aux: AuxState) -> bool:
    """True iff t is p's sigma-last green write, or p's yellow write."""
    _require_known(aux, t)
    if t == last_green(p, aux):
        return True
    return aux.kappa[t] is Color.YELLOW and aux.hist[t].rec.ptr is p


def dom_joint(aux: AuxState) -> frozenset[Timestamp]:
    return frozenset(t for t, e in aux.hist.items() if e.owner.kind is OwnerKind.JOINT)


def dom_self(aux: AuxState, tid: Tid) -> frozenset[Timestamp]:
    return frozenset(
        t
        for t, e in aux.hist.items()
        if e.owner.kind is OwnerKind.THREAD and e.owner.tid == tid
    )


def dom_other(aux: AuxState, tid: Tid) -> frozenset[Timestamp]:
    """Events finished by the environment of tid: init events plus other threads'."""
    out = set()
    for t, e in aux.hist.items():
        if e.owner.kind is OwnerKind.INIT:
            out.add(t)
        elif e.owner.kind is OwnerKind.THREAD and e.owner.tid != tid:
            out.add(t)
    return frozenset(out)


_PTR_NAME = {Ptr.X: "x", Ptr.Y: "y"}
_COLOR_NAME = {Color.GREEN: "green", Color.YELLOW: "yellow", Color.RED: "red"}
_OWNER_NAME = {OwnerKind.INIT: "init", OwnerKind.JOINT: "joint", OwnerKind.THREAD: "thread"}
_PHASE_NAME = {
    WriterPhase.OFF: "off",
    WriterPhase.NEW: "new",
    WriterPhase.FWD: "fwd",
    WriterPhase.DONE: "done",
}


def aux_key(aux: AuxState) -> tuple:
    """Canonical, primitive-only tuple identifying the auxiliary state."""
    cache = _derived(aux)
    key = cache.get("key")
    if key is None:
        key = cache["key"] = (
            tuple(
                sorted(
                    (t, _PTR_NAME[e.rec.ptr], e.rec.val, _OWNER_NAME[e.owner.kind], e.owner.tid)
                    for t, e in aux.hist.items()
                )
            ),
            aux.sigma,
            tuple(sorted((t, _COLOR_NAME[c]) for t, c in aux.kappa.items())),
            tuple(sorted(aux.tau.items())),
            (_PHASE_NAME[aux.wx.phase], aux.wx.t, aux.wx.v),
            (_PHASE_NAME[aux.wy.phase], aux.wy.t, aux.wy.v),
            (aux.scanner.on, aux.scanner.t_off, aux.scanner.sx, aux.scanner.sy),
        )
    return key
