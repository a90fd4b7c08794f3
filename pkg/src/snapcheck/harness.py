"""Client programs and schedulers.

``explore`` walks every reachable state of a program (depth-first over
distinct states, so commuting interleavings are explored once), running the
full invariant battery after every atomic step, the method postconditions at
every return, and the brute-force oracle on one representative execution per
distinct terminal state.  The exact number of maximal interleavings is
computed by dynamic programming over the state graph.  ``run_schedule``
deterministically replays an explicit schedule into a full trace, and
``run_random`` drives seeded random executions.
"""

from __future__ import annotations

import hashlib
import pickle
import random
from dataclasses import dataclass, replace

from . import invariants, oracle
from .aux_model import (
    AuxState,
    Ptr,
    Tid,
    Timestamp,
    Value,
    aux_key,
    validate_value,
)
from .errors import BudgetExceededError, ScheduleError, TraceParseError
from .invariants import Violation
from .snapshot import (
    LOCK_SCAN,
    MethodCall,
    MethodFrame,
    PhysState,
    apply_step,
    aux_digest,
    init,
    lock_for,
    make_frame,
    phys_digest,
    phys_key,
    step_enabled,
)

DEFAULT_MAX_STATES = 1_000_000


@dataclass(frozen=True)
class Program:
    """A finite client: per-thread call lists plus the initial values.

    Two threads may target the same pointer; the per-pointer writer locks
    serialize them at run time (the single-writer discipline is dynamic,
    not syntactic).
    """

    name: str
    threads: tuple[tuple[Tid, tuple[MethodCall, ...]], ...]
    init_x: Value = 5
    init_y: Value = 0
    value_range: tuple[int, int] = (0, 7)

    def calls_of(self, tid: Tid) -> tuple[MethodCall, ...]:
        for t, calls in self.threads:
            if t == tid:
                return calls
        raise KeyError(tid)


@dataclass(frozen=True)
class ThreadEntry:
    call_idx: int
    frame: MethodFrame | None


@dataclass(frozen=True)
class State:
    phys: PhysState
    aux: AuxState
    threads: tuple[tuple[Tid, ThreadEntry], ...]  # sorted by tid

    def entry(self, tid: Tid) -> ThreadEntry:
        for t, e in self.threads:
            if t == tid:
                return e
        raise KeyError(tid)

    def with_entry(self, tid: Tid, entry: ThreadEntry) -> "State":
        return replace(
            self,
            threads=tuple((t, entry if t == tid else e) for t, e in self.threads),
        )


@dataclass(frozen=True)
class StepOutcome:
    tid: Tid
    call_idx: int
    label: str
    kind: str
    ptr: Ptr | None
    invoked: bool
    returned: bool
    frame: MethodFrame


@dataclass(frozen=True)
class StepRecord:
    index: int
    tid: Tid
    label: str
    phys_digest: str
    aux_digest: str


@dataclass(frozen=True)
class MethodRecord:
    """One completed method: arguments, result, real-time interval, and the
    timestamps tying it to the logical order (the write's event, or the
    scan's witness and chosen per-pointer events)."""

    tid: Tid
    call: MethodCall
    result: tuple[Value, Value] | None
    invocation: int
    response: int
    t: Timestamp | None = None
    witness: Timestamp | None = None
    witness_x: Timestamp | None = None
    witness_y: Timestamp | None = None


@dataclass(frozen=True)
class Trace:
    program: str
    threads: tuple[tuple[Tid, tuple[str, ...]], ...]
    init_x: Value
    init_y: Value
    seed: int | None
    schedule: tuple[Tid, ...]
    steps: tuple[StepRecord, ...]
    methods: tuple[MethodRecord, ...]
    final_sigma: tuple[Timestamp, ...]
    final_sigma_values: tuple[Value, ...]
    final_kappa: tuple[tuple[Timestamp, str], ...]
    violations: tuple[str, ...]


@dataclass(frozen=True)
class Execution:
    """A completed run: its schedule, completed methods, and final state
    fingerprints.  Carries what the oracle needs (methods, final order,
    initial values)."""

    schedule: tuple[Tid, ...]
    methods: tuple[MethodRecord, ...]
    final_sigma: tuple[Timestamp, ...]
    final_sigma_values: tuple[Value, ...]
    final_aux: AuxState
    phys_digest: str
    aux_digest: str
    init_x: Value
    init_y: Value


@dataclass
class ExplorationReport:
    program: str
    mode: str
    states: int
    edges: int
    schedules: int
    runs: int | None
    seed: int | None
    scan_results: frozenset[tuple[Value, Value]]
    violations: list[Violation]
    executions: list[Execution]
    executions_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def violations_named(self, *prefixes: str) -> list[Violation]:
        return [v for v in self.violations if v.name.startswith(prefixes)]

    def render(self) -> str:
        lines = [
            f"program: {self.program}",
            f"mode: {self.mode}",
        ]
        if self.mode == "random":
            lines += [f"seed: {self.seed}", f"runs: {self.runs}"]
        lines += [
            f"states: {self.states}",
            f"edges: {self.edges}",
            f"schedules: {self.schedules}",
            f"executions checked: {self.executions_checked}",
            "scan results: " + " ".join(f"({x},{y})" for x, y in sorted(self.scan_results)),
            f"violations: {len(self.violations) if self.violations else 'none'}",
        ]
        lines += [v.render() for v in self.violations]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# machine driving


def initial_state(prog: Program) -> State:
    tids = [tid for tid, _ in prog.threads]
    if len(set(tids)) != len(tids):
        raise ValueError(f"duplicate thread ids in program {prog.name}")
    for _, calls in prog.threads:
        for call in calls:
            if call.kind == "write":
                validate_value(call.v, prog.value_range)
    phys, aux = init(prog.init_x, prog.init_y, prog.value_range)
    threads = tuple((tid, ThreadEntry(0, None)) for tid in sorted(tids))
    return State(phys, aux, threads)


def _next_lock(call: MethodCall) -> str:
    return LOCK_SCAN if call.kind == "scan" else lock_for(call.p)


def enabled_tids(prog: Program, state: State) -> list[Tid]:
    """Threads with an enabled next step, in canonical (sorted) order."""
    out = []
    for tid, entry in state.threads:
        if entry.frame is not None:
            if step_enabled(entry.frame.current_step(), state.phys):
                out.append(tid)
        else:
            calls = prog.calls_of(tid)
            if entry.call_idx < len(calls):
                if state.phys.holder(_next_lock(calls[entry.call_idx])) is None:
                    out.append(tid)
    return out


def step_state(prog: Program, state: State, tid: Tid) -> tuple[State, StepOutcome]:
    """Apply tid's next atomic step.  A thread starting a new call gets its
    frame (and pre-state snapshot) created here, just before its acquire."""
    entry = state.entry(tid)
    frame = entry.frame
    invoked = False
    if frame is None:
        call = prog.calls_of(tid)[entry.call_idx]
        frame = make_frame(tid, call, state.aux)
        invoked = True
    step = frame.current_step()
    phys2, aux2, frame2 = apply_step(step, state.phys, state.aux, frame)
    outcome = StepOutcome(
        tid=tid,
        call_idx=entry.call_idx,
        label=step.label,
        kind=step.kind,
        ptr=step.ptr,
        invoked=invoked,
        returned=frame2.returned and not frame.returned,
        frame=frame2,
    )
    if frame2.done:
        entry2 = ThreadEntry(entry.call_idx + 1, None)
    else:
        entry2 = ThreadEntry(entry.call_idx, frame2)
    return State(phys2, aux2, state.threads).with_entry(tid, entry2), outcome


def state_key(state: State) -> bytes:
    """128-bit fingerprint of the combined state (method records excluded:
    they are path bookkeeping, not machine state)."""
    key = (
        phys_key(state.phys),
        aux_key(state.aux),
        tuple(
            (tid, e.call_idx, e.frame.key() if e.frame is not None else None)
            for tid, e in state.threads
        ),
    )
    return hashlib.blake2b(pickle.dumps(key, protocol=5), digest_size=16).digest()


def sigma_values(aux: AuxState) -> tuple[Value, ...]:
    return tuple(aux.hist[t].rec.val for t in aux.sigma)


# ---------------------------------------------------------------------------
# the per-step / per-return check battery


class _Checker:
    """Accumulates violations, scan results, and per-path method records."""

    def __init__(self, prog: Program, check_oracle: bool = True):
        self.prog = prog
        self.check_oracle = check_oracle
        self.violations: list[Violation] = []
        self.scan_results: set[tuple[Value, Value]] = set()
        self.methods: list[MethodRecord] = []
        self.pending_inv: dict[tuple[Tid, int], int] = {}
        self.executions_checked = 0

    def _absorb(self, rep: invariants.ViolationReport, idx: int) -> None:
        if rep.violations:
            rep.stamp(idx)
            self.violations.extend(rep.violations)

    def on_state(self, state: State, idx: int) -> None:
        self._absorb(invariants.check_all(state.phys, state.aux), idx)

    def on_edge(self, pre: State, post: State, out: StepOutcome, idx: int) -> tuple:
        self._absorb(invariants.check_transition(pre.aux, post.aux), idx)
        fr = out.frame
        if out.invoked:
            self.pending_inv[(out.tid, out.call_idx)] = idx
        if out.kind == "read":
            sc = post.aux.scanner
            if sc.on and sc.bit(out.ptr):
                value = fr.vx if out.ptr is Ptr.X else fr.vy
                self._absorb(invariants.check_read_lemma(out.ptr, value, post.aux), idx)
        if out.kind == "relink":
            self._absorb(
                invariants.check_relink_post(post.aux, fr.witness_x, fr.witness_y), idx
            )
        returned = False
        if out.returned:
            returned = True
            inv = self.pending_inv[(out.tid, out.call_idx)]
            rec = self._method_record(out, post, inv, idx)
            self.methods.append(rec)
            if fr.call.kind == "write":
                self._absorb(
                    invariants.check_write_post(
                        fr.snapshot, post.aux, fr.t, out.tid, fr.call.p, fr.call.v
                    ),
                    idx,
                )
            else:
                self.scan_results.add(fr.result)
                self._absorb(
                    invariants.check_scan_post(fr.snapshot, post.aux, fr.result, rec.witness),
                    idx,
                )
        return (out.tid, out.call_idx, out.invoked, returned)

    def undo(self, token: tuple) -> None:
        tid, call_idx, invoked, returned = token
        if returned:
            self.methods.pop()
        if invoked:
            del self.pending_inv[(tid, call_idx)]

    def _method_record(
        self, out: StepOutcome, post: State, inv: int, idx: int
    ) -> MethodRecord:
        fr = out.frame
        if fr.call.kind == "write":
            return MethodRecord(out.tid, fr.call, None, inv, idx, t=fr.t)
        pos = {t: i for i, t in enumerate(post.aux.sigma)}
        w = fr.witness_x if pos[fr.witness_x] >= pos[fr.witness_y] else fr.witness_y
        return MethodRecord(
            out.tid,
            fr.call,
            fr.result,
            inv,
            idx,
            witness=w,
            witness_x=fr.witness_x,
            witness_y=fr.witness_y,
        )

    def finish_execution(self, state: State, schedule) -> Execution:
        ex = Execution(
            schedule=tuple(schedule),
            methods=tuple(self.methods),
            final_sigma=state.aux.sigma,
            final_sigma_values=sigma_values(state.aux),
            final_aux=state.aux,
            phys_digest=phys_digest(state.phys),
            aux_digest=aux_digest(state.aux),
            init_x=self.prog.init_x,
            init_y=self.prog.init_y,
        )
        if self.check_oracle:
            self.executions_checked += 1
            idx = len(schedule)
            if not oracle.validate_witness(ex):
                self.violations.append(
                    Violation("oracle-witness", f"witness order rejected for {ex.schedule}", idx)
                )
            ops = oracle.ops_from_methods(ex.methods, ex.init_x, ex.init_y)
            if oracle.linearizable(ops) is None:
                self.violations.append(
                    Violation(
                        "oracle-linearizable",
                        f"no linearization witness for {ex.schedule}",
                        idx,
                    )
                )
        return ex


# ---------------------------------------------------------------------------
# schedulers


def explore(
    prog: Program,
    max_states: int = DEFAULT_MAX_STATES,
    check_oracle: bool = True,
    keep_executions: bool = True,
) -> ExplorationReport:
    """Exhaustively explore every reachable state of the program.

    Distinct states are visited once; the schedule count is the exact number
    of maximal interleavings, computed over the state graph.  Raises
    :class:`BudgetExceededError` when more than ``max_states`` distinct
    states are reached.
    """
    checker = _Checker(prog, check_oracle)
    state0 = initial_state(prog)
    checker.on_state(state0, -1)
    visited: dict[bytes, int] = {}
    sched: list[Tid] = []
    executions: list[Execution] = []
    edges = 0

    def dfs(state: State, key: bytes) -> int:
        nonlocal edges
        if len(visited) >= max_states:
            raise BudgetExceededError(f"state budget {max_states} exceeded")
        visited[key] = 0
        enabled = enabled_tids(prog, state)
        if not enabled:
            ex = checker.finish_execution(state, sched)
            if keep_executions:
                executions.append(ex)
            visited[key] = 1
            return 1
        total = 0
        idx = len(sched)
        for tid in enabled:
            post, out = step_state(prog, state, tid)
            edges += 1
            pkey = state_key(post)
            known = visited.get(pkey)
            if known is None:
                checker.on_state(post, idx)
            token = checker.on_edge(state, post, out, idx)
            if known is None:
                sched.append(tid)
                total += dfs(post, pkey)
                sched.pop()
            else:
                total += known
            checker.undo(token)
        visited[key] = total
        return total

    schedules = dfs(state0, state_key(state0))
    return ExplorationReport(
        program=prog.name,
        mode="exhaustive",
        states=len(visited),
        edges=edges,
        schedules=schedules,
        runs=None,
        seed=None,
        scan_results=frozenset(checker.scan_results),
        violations=checker.violations,
        executions=executions,
        executions_checked=checker.executions_checked,
    )


def run_schedule(prog: Program, schedule) -> Trace:
    """Deterministically replay an explicit schedule into a full trace.

    Raises :class:`ScheduleError` when the schedule picks a thread with no
    enabled step or stops before the program completes.
    """
    checker = _Checker(prog, check_oracle=True)
    state = initial_state(prog)
    checker.on_state(state, -1)
    steps: list[StepRecord] = []
    for idx, tid in enumerate(schedule):
        if tid not in enabled_tids(prog, state):
            raise ScheduleError(f"step {idx}: thread {tid!r} has no enabled step")
        post, out = step_state(prog, state, tid)
        checker.on_state(post, idx)
        checker.on_edge(state, post, out, idx)
        steps.append(
            StepRecord(idx, tid, out.label, phys_digest(post.phys), aux_digest(post.aux))
        )
        state = post
    if enabled_tids(prog, state):
        raise ScheduleError("schedule ended before the program completed")
    checker.finish_execution(state, tuple(schedule))
    return Trace(
        program=prog.name,
        threads=tuple((tid, tuple(c.render() for c in calls)) for tid, calls in prog.threads),
        init_x=prog.init_x,
        init_y=prog.init_y,
        seed=None,
        schedule=tuple(schedule),
        steps=tuple(steps),
        methods=tuple(checker.methods),
        final_sigma=state.aux.sigma,
        final_sigma_values=sigma_values(state.aux),
        final_kappa=tuple(sorted((t, c.value) for t, c in state.aux.kappa.items())),
        violations=tuple(v.render() for v in checker.violations),
    )


def run_prefix(prog: Program, schedule) -> State:
    """Drive a schedule prefix with no checking; test/demo helper."""
    state = initial_state(prog)
    for idx, tid in enumerate(schedule):
        if tid not in enabled_tids(prog, state):
            raise ScheduleError(f"step {idx}: thread {tid!r} has no enabled step")
        state, _ = step_state(prog, state, tid)
    return state


def run_random(
    prog: Program, seed: int, runs: int, check_oracle: bool = True
) -> ExplorationReport:
    """Seeded uniformly-random scheduling; identical seed, identical report."""
    rng = random.Random(seed)
    violations: list[Violation] = []
    results: set[tuple[Value, Value]] = set()
    executions_checked = 0
    total_steps = 0
    for run in range(runs):
        checker = _Checker(prog, check_oracle)
        state = initial_state(prog)
        checker.on_state(state, -1)
        sched: list[Tid] = []
        while True:
            enabled = enabled_tids(prog, state)
            if not enabled:
                break
            tid = enabled[rng.randrange(len(enabled))]
            post, out = step_state(prog, state, tid)
            checker.on_state(post, len(sched))
            checker.on_edge(state, post, out, len(sched))
            sched.append(tid)
            state = post
        checker.finish_execution(state, sched)
        total_steps += len(sched)
        for v in checker.violations:
            v.detail = f"run {run}: {v.detail}"
        violations.extend(checker.violations)
        results |= checker.scan_results
        executions_checked += checker.executions_checked
    return ExplorationReport(
        program=prog.name,
        mode="random",
        states=total_steps,
        edges=total_steps,
        schedules=runs,
        runs=runs,
        seed=seed,
        scan_results=frozenset(results),
        violations=violations,
        executions=[],
        executions_checked=executions_checked,
    )


# ---------------------------------------------------------------------------
# bundled clients


def client_fig1() -> Program:
    """Three threads: l writes x then y, c scans, r writes x."""
    return Program(
        "fig1",
        (
            ("l", (MethodCall.write(Ptr.X, 2), MethodCall.write(Ptr.Y, 1))),
            ("c", (MethodCall.scan(),)),
            ("r", (MethodCall.write(Ptr.X, 3),)),
        ),
    )


def client_e() -> Program:
    prog = client_fig1()
    return replace(prog, name="e")


def client_e_prime(v: Value = 2) -> Program:
    """One thread: scan, then write x; exercises sequential composition."""
    return Program("e-prime", (("t", (MethodCall.scan(), MethodCall.write(Ptr.X, v))),))


# The bundled scanner-miss interleaving: the scan reads x=5, y=0, both writes
# of l forward their values (2 then 1), r's write of 3 lands between them and
# is missed (it reads the scanner bit after it was unset), so the scan
# returns (2,1) and the missed write is relinked after it.
FIG1_SCHEDULE: tuple[Tid, ...] = (
    # c: acquire, set scanner bit, clear fx, clear fy, read x, read y
    "c", "c", "c", "c", "c", "c",
    # l: full write(x,2) incl. forwarding
    "l", "l", "l", "l", "l", "l",
    # r: acquire wx, register write(x,3)
    "r", "r",
    # l: full write(y,1) incl. forwarding
    "l", "l", "l", "l", "l", "l",
    # c: unset scanner bit
    "c",
    # r: read scanner bit (false), finalize, release
    "r", "r", "r",
    # c: read fx, read fy, relink+return, release
    "c", "c", "c", "c",
)


def _pointer_variants(p: Ptr, vals: tuple[Value, Value], tid: Tid):
    w = MethodCall.write
    return (
        (0, ()),
        (1, ((tid, (w(p, vals[0]),)),)),
        (2, ((tid, (w(p, vals[0]), w(p, vals[1]))),)),
    )


def generated_programs() -> list[Program]:
    """Every program with at most two writes per pointer plus one scan,
    one writer thread per pointer: 9 programs.  Same-pointer lock
    contention is covered by the bundled three-thread clients."""
    out = []
    for kx, xthreads in _pointer_variants(Ptr.X, (2, 3), "a"):
        for ky, ythreads in _pointer_variants(Ptr.Y, (1, 4), "d"):
            threads = xthreads + ythreads + (("s", (MethodCall.scan(),)),)
            out.append(Program(f"gen-x{kx}-y{ky}", threads))
    return out


# ---------------------------------------------------------------------------
# program files


def parse_program(text: str, name: str = "custom") -> Program:
    """Parse a program file: one thread per line (``tid: write x 2; scan``),
    optional leading ``init <vx> <vy>`` line, ``#`` comments."""
    init_x, init_y = 5, 0
    threads: list[tuple[Tid, tuple[MethodCall, ...]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("init") and ":" not in line:
            parts = line.split()
            if len(parts) != 3:
                raise TraceParseError(f"line {lineno}: expected 'init <vx> <vy>'")
            try:
                init_x, init_y = int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise TraceParseError(f"line {lineno}: {exc}") from exc
            continue
        tid, sep, rest = line.partition(":")
        if not sep or not tid.strip():
            raise TraceParseError(f"line {lineno}: expected 'tid: call; call; ...'")
        try:
            calls = tuple(
                MethodCall.parse(part.strip())
                for part in rest.split(";")
                if part.strip()
            )
        except ValueError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from exc
        threads.append((tid.strip(), calls))
    tids = [t for t, _ in threads]
    if len(set(tids)) != len(tids):
        raise TraceParseError("duplicate thread ids")
    return Program(name, tuple(threads), init_x, init_y)


def render_program(prog: Program) -> str:
    lines = [f"init {prog.init_x} {prog.init_y}"]
    for tid, calls in prog.threads:
        lines.append(f"{tid}: " + "; ".join(c.render() for c in calls))
    return "\n".join(lines) + "\n"
