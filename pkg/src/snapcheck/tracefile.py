"""Trace file format: JSON Lines, one kind-tagged record per line.

Header (program, init values, seed/schedule), one record per step, one per
completed method, and a footer with the final logical order, colors, and
violation list.  ``parse_trace(render_trace(t)) == t``.
"""

from __future__ import annotations

import json

from .errors import TraceParseError
from .harness import MethodRecord, StepRecord, Trace
from .snapshot import MethodCall


def render_trace(trace: Trace) -> str:
    lines = [
        json.dumps(
            {
                "kind": "header",
                "program": trace.program,
                "threads": [[tid, list(calls)] for tid, calls in trace.threads],
                "init": [trace.init_x, trace.init_y],
                "seed": trace.seed,
                "schedule": list(trace.schedule),
            },
            sort_keys=True,
        )
    ]
    for s in trace.steps:
        lines.append(
            json.dumps(
                {
                    "kind": "step",
                    "i": s.index,
                    "tid": s.tid,
                    "label": s.label,
                    "phys": s.phys_digest,
                    "aux": s.aux_digest,
                },
                sort_keys=True,
            )
        )
    for m in trace.methods:
        lines.append(
            json.dumps(
                {
                    "kind": "method",
                    "tid": m.tid,
                    "op": m.call.render(),
                    "result": list(m.result) if m.result is not None else None,
                    "inv": m.invocation,
                    "resp": m.response,
                    "t": m.t,
                    "witness": m.witness,
                    "wx": m.witness_x,
                    "wy": m.witness_y,
                },
                sort_keys=True,
            )
        )
    lines.append(
        json.dumps(
            {
                "kind": "footer",
                "sigma": list(trace.final_sigma),
                "sigma_values": list(trace.final_sigma_values),
                "kappa": [[t, c] for t, c in trace.final_kappa],
                "violations": list(trace.violations),
            },
            sort_keys=True,
        )
    )
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    program = ""
    threads: tuple = ()
    init_x, init_y = 5, 0
    seed = None
    schedule: tuple = ()
    steps: list[StepRecord] = []
    methods: list[MethodRecord] = []
    final_sigma: tuple = ()
    final_sigma_values: tuple = ()
    final_kappa: tuple = ()
    violations: tuple = ()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            kind = rec["kind"]
            if kind == "header":
                program = rec["program"]
                threads = tuple((tid, tuple(calls)) for tid, calls in rec["threads"])
                init_x, init_y = rec["init"]
                seed = rec["seed"]
                schedule = tuple(rec["schedule"])
            elif kind == "step":
                steps.append(
                    StepRecord(rec["i"], rec["tid"], rec["label"], rec["phys"], rec["aux"])
                )
            elif kind == "method":
                result = rec["result"]
                methods.append(
                    MethodRecord(
                        tid=rec["tid"],
                        call=MethodCall.parse(rec["op"]),
                        result=tuple(result) if result is not None else None,
                        invocation=rec["inv"],
                        response=rec["resp"],
                        t=rec["t"],
                        witness=rec["witness"],
                        witness_x=rec["wx"],
                        witness_y=rec["wy"],
                    )
                )
            elif kind == "footer":
                final_sigma = tuple(rec["sigma"])
                final_sigma_values = tuple(rec["sigma_values"])
                final_kappa = tuple((t, c) for t, c in rec["kappa"])
                violations = tuple(rec["violations"])
            else:
                raise TraceParseError(f"line {lineno}: unknown record kind {kind!r}")
        except TraceParseError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from exc
    return Trace(
        program=program,
        threads=threads,
        init_x=init_x,
        init_y=init_y,
        seed=seed,
        schedule=schedule,
        steps=tuple(steps),
        methods=tuple(methods),
        final_sigma=final_sigma,
        final_sigma_values=final_sigma_values,
        final_kappa=final_kappa,
        violations=violations,
    )
