"""CLI wiring and the exit-code contract (0 ok, 1 violation, 2 budget,
3 schedule, 4 parse)."""

import json

import pytest

from snapcheck.cli import main
from snapcheck.harness import FIG1_SCHEDULE


@pytest.fixture
def sched_file(tmp_path):
    path = tmp_path / "fig1.sched"
    path.write_text("\n".join(FIG1_SCHEDULE) + "\n")
    return path


def test_demo_fig1(capsys):
    assert main(["demo-fig1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "(2,1)" in out
    assert "sigma: 5 0 2 1 3" in out


def test_demo_fig1_writes_trace(tmp_path, capsys):
    out_file = tmp_path / "demo.trace"
    assert main(["demo-fig1", "--out", str(out_file)]) == 0
    capsys.readouterr()
    assert main(["check", "--trace", str(out_file)]) == 0
    out = capsys.readouterr().out
    assert "witness: ok" in out and "linearizable: ok" in out


def test_explore_program_file(tmp_path, capsys):
    prog = tmp_path / "tiny.prog"
    prog.write_text("a: write x 2\ns: scan\n")
    assert main(["explore", "--program", str(prog)]) == 0
    out = capsys.readouterr().out
    assert "scan results: (2,0) (5,0)" in out
    assert "violations: none" in out


def test_explore_budget_exit(capsys):
    assert main(["explore", "--client", "e", "--max-states", "10"]) == 2


def test_explore_bad_program_file(tmp_path, capsys):
    prog = tmp_path / "bad.prog"
    prog.write_text("nonsense without colon\n")
    assert main(["explore", "--program", str(prog)]) == 4


def test_replay_deterministic(tmp_path, sched_file, capsys):
    t1 = tmp_path / "a.trace"
    t2 = tmp_path / "b.trace"
    assert main(["replay", "--client", "fig1", "--schedule", str(sched_file), "--out", str(t1)]) == 0
    assert main(["replay", "--client", "fig1", "--schedule", str(sched_file), "--out", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()
    out = capsys.readouterr().out
    assert "scan -> (2,1)" in out


def test_replay_truncated_schedule(tmp_path, capsys):
    sched = tmp_path / "short.sched"
    sched.write_text("\n".join(FIG1_SCHEDULE[:5]) + "\n")
    assert main(["replay", "--client", "fig1", "--schedule", str(sched)]) == 3


def test_replay_invalid_schedule(tmp_path, capsys):
    sched = tmp_path / "bad.sched"
    sched.write_text("z z z\n")
    assert main(["replay", "--client", "fig1", "--schedule", str(sched)]) == 3


def test_check_fault_injected_trace(tmp_path, capsys):
    out_file = tmp_path / "demo.trace"
    main(["demo-fig1", "--out", str(out_file)])
    capsys.readouterr()
    # corrupt the scan's recorded result
    lines = out_file.read_text().splitlines()
    for i, line in enumerate(lines):
        rec = json.loads(line)
        if rec["kind"] == "method" and rec["op"] == "scan":
            rec["result"] = [5, 1]
            lines[i] = json.dumps(rec, sort_keys=True)
    out_file.write_text("\n".join(lines) + "\n")
    assert main(["check", "--trace", str(out_file)]) == 1


def test_check_empty_trace(tmp_path, capsys):
    empty = tmp_path / "empty.trace"
    empty.write_text("")
    assert main(["check", "--trace", str(empty)]) == 0


def test_check_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text("definitely { not json\n")
    assert main(["check", "--trace", str(bad)]) == 4


def test_check_missing_file(tmp_path, capsys):
    assert main(["check", "--trace", str(tmp_path / "nope.trace")]) == 4


def test_explore_value_out_of_domain(tmp_path, capsys):
    prog = tmp_path / "big.prog"
    prog.write_text("a: write x 99\n")
    assert main(["explore", "--program", str(prog)]) == 4
