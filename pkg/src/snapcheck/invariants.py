"""Executable checkers for every state invariant, transition invariant,
lemma-level property, and method postcondition of the snapshot model.

Checks never raise on a bad state: they return a :class:`ViolationReport`
(empty report == all checks passed), so the harness can keep exploring and
collect everything that went wrong.  Phase-guarded invariants (red zone,
forwarded values, read values) evaluate vacuously true outside their guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .aux_model import (
    AuxState,
    Color,
    OwnerKind,
    Ptr,
    Timestamp,
    Tid,
    Value,
    WriterPhase,
    dom_joint,
    dom_other,
    eval_at,
    hist_p,
    last_green,
    omega_down,
    omega_leq,
    omega_pairs,
    owner_masks,
    scanned,
    scanned_mask,
    yellow_of,
    _ideal_masks,
    _positions,
)
from .errors import SnapshotModelError

if TYPE_CHECKING:  # pragma: no cover - annotations only
    from .snapshot import PhysState


@dataclass(frozen=True)
class SpecSnapshot:
    """Pre-state view frozen at a method's invocation: the caller's
    environment history, the already-linearized set, the global history
    domain, and the stable order as a pair set."""

    dom_other: frozenset[Timestamp]
    scanned_set: frozenset[Timestamp]
    dom_global: frozenset[Timestamp]
    omega: frozenset[tuple[Timestamp, Timestamp]]


def capture_spec_snapshot(aux: AuxState, tid: Tid) -> SpecSnapshot:
    return SpecSnapshot(
        dom_other=dom_other(aux, tid),
        scanned_set=scanned(aux),
        dom_global=frozenset(aux.hist),
        omega=omega_pairs(aux),
    )


@dataclass
class Violation:
    name: str
    detail: str
    step: int | None = None
    offenders: tuple = ()

    def render(self) -> str:
        return f"INV {self.name} @step={self.step}: {self.detail}"


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, name: str, detail: str, *offenders) -> None:
        self.violations.append(Violation(name, detail, offenders=tuple(offenders)))

    def merge(self, other: "ViolationReport") -> None:
        self.violations.extend(other.violations)

    def stamp(self, step: int | None) -> "ViolationReport":
        for v in self.violations:
            if v.step is None:
                v.step = step
        return self

    def render(self) -> str:
        return "\n".join(v.render() for v in self.violations)


# ---------------------------------------------------------------------------
# state-space invariants


def _check_wellformed(aux: AuxState, rep: ViolationReport) -> None:
    if sorted(aux.sigma) != sorted(aux.hist):
        rep.add("wellformed", f"sigma {aux.sigma} is not a permutation of dom hist")
    if set(aux.kappa) != set(aux.hist):
        rep.add("wellformed", "kappa is not total on dom hist")
    if not set(aux.tau) <= set(aux.hist):
        rep.add("wellformed", "tau mentions unknown timestamps")
    for p in (Ptr.X, Ptr.Y):
        w = aux.writer(p)
        if w.phase is not WriterPhase.OFF and w.t not in aux.hist:
            rep.add("wellformed", f"writer for {p.value} holds unknown timestamp {w.t}")


def _check_overlap(aux: AuxState, rep: ViolationReport) -> None:
    # non-overlapping events are never logically reordered
    pos = _positions(aux.sigma)
    for t1, end in aux.tau.items():
        for t2 in aux.hist:
            if end < t2 and not pos[t1] < pos[t2]:
                rep.add(
                    "overlap",
                    f"{t1} ended at {end} before {t2} began but follows it in sigma",
                    t1,
                    t2,
                )


def _check_colors(aux: AuxState, rep: ViolationReport) -> None:
    # per pointer: non-empty green prefix, at most one yellow, then reds
    for p in (Ptr.X, Ptr.Y):
        seq = hist_p(p, aux)
        colors = [aux.kappa[t] for t in seq]
        i = 0
        while i < len(colors) and colors[i] is Color.GREEN:
            i += 1
        if i == 0:
            rep.add("colors", f"{p.value}-history has no green prefix: {seq}")
            continue
        if i < len(colors) and colors[i] is Color.YELLOW:
            i += 1
        if any(c is not Color.RED for c in colors[i:]):
            rep.add(
                "colors",
                f"{p.value}-history breaks the green+/yellow?/red* pattern: "
                f"{[c.value for c in colors]}",
            )


def _check_last_write(phys: "PhysState", aux: AuxState, rep: ViolationReport) -> None:
    for p, actual in ((Ptr.X, phys.x), (Ptr.Y, phys.y)):
        seq = hist_p(p, aux)
        if not seq:
            rep.add("last-write", f"{p.value} has no writes at all")
            continue
        expect = aux.hist[seq[-1]].rec.val
        if actual != expect:
            rep.add(
                "last-write",
                f"{p.value} holds {actual} but sigma-last write {seq[-1]} wrote {expect}",
                seq[-1],
            )


def _check_joint_history(aux: AuxState, rep: ViolationReport) -> None:
    active = {}
    for p in (Ptr.X, Ptr.Y):
        w = aux.writer(p)
        if w.phase is not WriterPhase.OFF:
            active[w.t] = (p, w.v)
            entry = aux.hist.get(w.t)
            if (
                entry is None
                or entry.owner.kind is not OwnerKind.JOINT
                or entry.rec.ptr is not p
                or entry.rec.val != w.v
            ):
                rep.add(
                    "joint-history",
                    f"active writer for {p.value} ({w.phase.value} t={w.t} v={w.v}) "
                    "has no matching joint event",
                    w.t,
                )
    for t in dom_joint(aux):
        if t not in active:
            rep.add("joint-history", f"joint event {t} has no active writer", t)


def _check_terminated(aux: AuxState, rep: ViolationReport) -> None:
    non_joint = frozenset(aux.hist) - dom_joint(aux)
    if frozenset(aux.tau) != non_joint:
        rep.add(
            "terminated-events",
            f"dom tau {sorted(aux.tau)} != self+other events {sorted(non_joint)}",
        )
    top = aux.max_ts()
    for a, end in aux.tau.items():
        if end > top:
            rep.add("terminated-events", f"tau({a})={end} exceeds max timestamp {top}", a)


def _check_forwarded(phys: "PhysState", aux: AuxState, rep: ViolationReport) -> None:
    sc = aux.scanner
    if sc.on:
        return
    for p, fwd in ((Ptr.X, phys.fx), (Ptr.Y, phys.fy)):
        if not sc.bit(p) or fwd is None:
            continue
        allowed = {t for t in (last_green(p, aux), yellow_of(p, aux)) if t is not None}
        if not any(aux.hist[t].rec.val == fwd for t in allowed):
            rep.add(
                "forwarded-values",
                f"forwarded {p.value}-value {fwd} written by neither the last "
                f"green nor the yellow of {p.value}-history",
            )


def _check_red_zone(aux: AuxState, rep: ViolationReport) -> None:
    sc = aux.scanner
    if sc.on or not (sc.sx and sc.sy):
        return
    t_off = sc.t_off
    seen_red = False
    for t in aux.sigma:
        c = aux.kappa[t]
        if c is Color.RED:
            seen_red = True
        elif seen_red:
            rep.add("red-zone", f"{c.value} event {t} after a red one in sigma", t)
    for t in aux.hist:
        c = aux.kappa[t]
        if c is Color.GREEN and not t <= t_off:
            rep.add("red-zone", f"green {t} > t_off {t_off}", t)
        elif c is Color.YELLOW:
            end = aux.tau.get(t)
            if not t <= t_off or (end is not None and not t_off <= end):
                rep.add("red-zone", f"yellow {t} violates t <= t_off <= tau(t)", t)
        elif c is Color.RED and not t_off < t:
            rep.add("red-zone", f"red {t} <= t_off {t_off}", t)


def _check_first_forwarding(aux: AuxState, rep: ViolationReport) -> None:
    # events that terminated before the scan toggled off must be green
    sc = aux.scanner
    if sc.on or not (sc.sx and sc.sy):
        return
    for t, end in aux.tau.items():
        if end < sc.t_off and aux.kappa[t] is not Color.GREEN:
            rep.add(
                "first-forwarding",
                f"{t} terminated at {end} before t_off {sc.t_off} but is "
                f"{aux.kappa[t].value}",
                t,
            )


def check_state(phys: "PhysState", aux: AuxState) -> ViolationReport:
    """Evaluate every state-space invariant on one state."""
    rep = ViolationReport()
    _check_wellformed(aux, rep)
    if not rep.ok:
        return rep
    _check_overlap(aux, rep)
    _check_colors(aux, rep)
    _check_last_write(phys, aux, rep)
    _check_joint_history(aux, rep)
    _check_terminated(aux, rep)
    _check_forwarded(phys, aux, rep)
    _check_red_zone(aux, rep)
    _check_first_forwarding(aux, rep)
    return rep


# ---------------------------------------------------------------------------
# two-state transition invariants


def check_transition(pre: AuxState, post: AuxState) -> ViolationReport:
    """Monotonicity across one transition: histories, the stable order and
    the scanned set only grow, and scanned ideals never change."""
    rep = ViolationReport()
    if (
        pre.hist is post.hist
        and pre.kappa is post.kappa
        and pre.tau is post.tau
        and pre.sigma is post.sigma
    ):
        # only writer/scanner phases changed: events, ownership, the stable
        # order and scanned are literally the same objects, so every
        # monotonicity requirement holds by reflexivity
        return rep
    for t, e in pre.hist.items():
        e2 = post.hist.get(t)
        if e2 is None or e2.rec != e.rec:
            rep.add("hist-mono", f"event {t} lost or rewritten", t)
            return rep
    pre_init, pre_self = owner_masks(pre)
    post_init, post_self = owner_masks(post)
    pre_all = sum(pre_self.values())
    post_all = sum(post_self.values())
    for tid, mask in pre_self.items():
        if mask & ~post_self.get(tid, 0):
            rep.add("hist-mono", f"self history of {tid} shrank")
    for tid in set(pre_self) | set(post_self):
        # other(tid) = init events plus events finished by any other thread
        pre_other = pre_init | (pre_all & ~pre_self.get(tid, 0))
        post_other = post_init | (post_all & ~post_self.get(tid, 0))
        if pre_other & ~post_other:
            rep.add("hist-mono", f"other history of {tid} shrank")
    pre_masks = _ideal_masks(pre)
    post_masks = _ideal_masks(post)
    for t, mask in pre_masks.items():
        if mask & ~post_masks[t]:
            rep.add("omega-mono", f"stable-order pairs below {t} lost", t)
    pre_sc = scanned_mask(pre)
    if pre_sc & ~scanned_mask(post):
        rep.add("scanned-mono", "scanned shrank")
    else:
        for s in scanned(pre):
            if pre_masks[s] != post_masks[s]:
                rep.add(
                    "scanned-ideal",
                    f"ideal of scanned {s} changed across the transition",
                    s,
                )
            elif _eval_or_none(s, pre) != _eval_or_none(s, post):
                # snapshot preservation: an already-observed snapshot stays
                # valid under every later transition
                rep.add(
                    "scanned-eval",
                    f"snapshot at scanned {s} changed across the transition",
                    s,
                )
    return rep


def _eval_or_none(t: Timestamp, aux: AuxState):
    try:
        return eval_at(t, aux.sigma, aux.hist)
    except SnapshotModelError:
        return None


# ---------------------------------------------------------------------------
# method postconditions (checked at return against the invocation snapshot)


def check_write_post(
    snap: SpecSnapshot,
    ret: AuxState,
    t: Timestamp,
    tid: Tid,
    p: Ptr,
    v: Value,
) -> ViolationReport:
    """write's postcondition: the event t -> (p, v) is fresh, now owned by
    tid, and every prior-terminated or already-scanned event is strictly
    below t in the stable order."""
    rep = ViolationReport()
    entry = ret.hist.get(t)
    if entry is None or entry.rec.ptr is not p or entry.rec.val != v:
        rep.add("write-post", f"no event {t} -> ({p.value},{v}) in the return state", t)
        return rep
    if entry.owner.kind is not OwnerKind.THREAD or entry.owner.tid != tid:
        rep.add("write-post", f"event {t} not owned by {tid} at return", t)
    if t in snap.dom_global:
        rep.add("write-post", f"timestamp {t} is not fresh wrt the invocation state", t)
    for s in sorted(snap.dom_other | snap.scanned_set):
        if s == t or not omega_leq(s, t, ret):
            rep.add(
                "write-post",
                f"pre-invocation event {s} is not strictly below the write {t}",
                s,
                t,
            )
    return rep


def check_scan_post(
    snap: SpecSnapshot,
    ret: AuxState,
    r: tuple[Value, Value],
    witness: Timestamp | None = None,
) -> ViolationReport:
    """scan's postcondition: some timestamp t replays to the returned pair,
    dominates the whole invocation-time history, and is scanned.  The
    constructive witness, when given, must itself qualify."""
    rep = ViolationReport()
    ret_scanned = scanned(ret)

    def qualifies(t: Timestamp) -> bool:
        if t not in ret_scanned:
            return False
        if not snap.dom_global <= omega_down(t, ret):
            return False
        try:
            return eval_at(t, ret.sigma, ret.hist) == r
        except SnapshotModelError:
            return False

    good = [t for t in ret.sigma if qualifies(t)]
    if not good:
        rep.add("scan-post", f"no witness timestamp validates the snapshot {r}")
    if witness is not None and witness not in good:
        rep.add("scan-post", f"constructive witness {witness} does not qualify", witness)
    return rep


# ---------------------------------------------------------------------------
# lemma-level checks


def check_chain_lemma(aux: AuxState) -> ViolationReport:
    """Every all-green sigma-prefix is exactly the stable-order ideal of its
    last element."""
    rep = ViolationReport()
    masks = _ideal_masks(aux)
    prefix_mask = 0
    for t in aux.sigma:
        if aux.kappa[t] is not Color.GREEN:
            break
        prefix_mask |= 1 << t
        if masks[t] != prefix_mask:
            rep.add(
                "chain",
                f"all-green prefix through {t} differs from its stable ideal",
                t,
            )
    return rep


def check_read_lemma(p: Ptr, value: Value, aux: AuxState) -> ViolationReport:
    """While the scanner is on with p's bit set, a read of p returns the
    value of p's last green or yellow event."""
    rep = ViolationReport()
    allowed = {
        aux.hist[t].rec.val
        for t in (last_green(p, aux), yellow_of(p, aux))
        if t is not None
    }
    if value not in allowed:
        rep.add(
            "read-value",
            f"scan read {p.value}={value}, not a last-green/yellow value {sorted(allowed)}",
        )
    return rep


def check_relink_post(
    aux: AuxState, t_x: Timestamp, t_y: Timestamp
) -> ViolationReport:
    """relink's guarantee: each chosen event is now the sigma-last green of
    its pointer, and everything up to the later of the two is green."""
    rep = ViolationReport()
    for p, t in ((Ptr.X, t_x), (Ptr.Y, t_y)):
        if last_green(p, aux) != t:
            rep.add("relink-post", f"{t} is not the last green of {p.value} after relink", t)
    pos = _positions(aux.sigma)
    top = t_x if pos[t_x] >= pos[t_y] else t_y
    for s in aux.sigma[: pos[top] + 1]:
        if aux.kappa[s] is not Color.GREEN:
            rep.add("relink-post", f"{s} below {top} is {aux.kappa[s].value}, not green", s)
    return rep


def check_omega_properties(aux: AuxState) -> ViolationReport:
    """Order sanity on one state: the stable order is reflexive,
    antisymmetric and transitive, and scanned is linear and downward
    closed under it."""
    rep = ViolationReport()
    dom = aux.sigma
    masks = _ideal_masks(aux)
    ideals = {t: omega_down(t, aux) for t in dom}
    for t in dom:
        if not (masks[t] >> t) & 1:
            rep.add("omega-reflexive", f"{t} not related to itself", t)
    for i, a in enumerate(dom):
        for b in dom[i + 1 :]:
            if (masks[b] >> a) & 1 and (masks[a] >> b) & 1:
                rep.add("omega-antisymmetric", f"{a} and {b} related both ways", a, b)
    for t in dom:
        below = 0
        for s in ideals[t]:
            below |= masks[s]
        if below & ~masks[t]:
            rep.add(
                "omega-transitive",
                f"elements below {t}'s predecessors are not all below {t}",
                t,
            )
    sc = scanned(aux)
    sc_mask = scanned_mask(aux)
    for a in sc:
        for b in sc:
            if not ((masks[b] >> a) & 1 or (masks[a] >> b) & 1):
                rep.add("scanned-linear", f"scanned {a}, {b} are incomparable", a, b)
    for b in sc:
        if masks[b] & ~sc_mask:
            rep.add("scanned-downward", f"non-scanned events below scanned {b}", b)
    return rep


def check_all(phys: "PhysState", aux: AuxState) -> ViolationReport:
    """State invariants plus order sanity plus the chain lemma."""
    rep = check_state(phys, aux)
    rep.merge(check_omega_properties(aux))
    rep.merge(check_chain_lemma(aux))
    return rep


def render_violations(violations: Iterable[Violation]) -> str:
    return "\n".join(v.render() for v in violations)
