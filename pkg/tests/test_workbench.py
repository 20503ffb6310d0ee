import json
from importlib import resources
from pathlib import Path

import pytest

from idiom_forge.cli import main
from idiom_forge.isa import parse_asm, to_asm
from idiom_forge.machine import Opaque, Packed
from idiom_forge.query import QueryError, parse_cost_model, parse_query
from idiom_forge.report import Report, emit, run_query
from idiom_forge.terms import IntLit, Sym

QUERIES = resources.files("idiom_forge").joinpath("data/queries")


def shipped(name: str) -> str:
    return QUERIES.joinpath(f"{name}.q").read_text(encoding="utf-8")


def shipped_path(name: str) -> Path:
    return Path(str(QUERIES.joinpath(f"{name}.q")))


def test_zero_query_parses():
    q = parse_query(shipped("zero"))
    assert q.name == "zero"
    assert all(isinstance(r, Opaque) for r in q.start.regs)
    assert q.goal.regs[0] == (IntLit(0),) * 4
    assert q.goal.regs[1:] == (None,) * 7
    assert q.engine == "ids" and q.budget.max_depth == 2


def test_unlisted_start_registers_are_opaque():
    q = parse_query("start xmm1 = [1,2,3,4]\ngoal xmm0 = [1,2,3,4]\n")
    assert q.start.regs[0] == Opaque("xmm0")
    assert isinstance(q.start.regs[1], Packed)


@pytest.mark.parametrize("start", ["_", "[_,1,2,3]", "[a,b,(c+_),d]"])
def test_wildcard_start_rejected(start):
    with pytest.raises(QueryError) as info:
        parse_query(f"start xmm0 = {start}\ngoal xmm1 = [0,0,0,0]\n")
    assert "wildcard" in str(info.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("scalars c\ngoal xmm0 = [z,z,z,z]\n", "undeclared"),
        ("goal xmm0 = [0,0,0]\n", "four lanes"),
        ("name x\n", "no goal"),
        ("goal xmm0 = [_,_,_,_]\ngoal xmm0 = [0,0,0,0]\n", "twice"),
        ("goal xmm9 = [0,0,0,0]\n", "out of range"),
        ("registers xmm1\ngoal xmm0 = [0,0,0,0]\n", "usable"),
        ("engine dfs\ngoal xmm0 = [0,0,0,0]\n", "engine"),
        ("max_depth lots\ngoal xmm0 = [0,0,0,0]\n", "integer"),
        ("frobnicate\n", "unknown directive"),
        ("start xmm1 = opaque xmm0\ngoal xmm1 = [0,0,0,0]\n", "distinct"),
        ("goal xmm0 = [(a+,0,0,0]\n", "position"),
    ],
)
def test_query_errors(text, fragment):
    with pytest.raises(QueryError) as info:
        parse_query(text)
    assert fragment in str(info.value)


def test_goal_symbols_from_start_lanes_are_declared():
    q = parse_query(shipped("hsum"))
    assert q.registers == (0, 1)
    assert q.allow == ("movdqa", "psrldq", "paddd", "punpckldq")
    assert q.start.regs[0] == Packed(tuple(Sym(n) for n in "abcd"))


def test_cost_model_file():
    assert parse_cost_model("cycles pcmpeqd 3\n# x\ncycles pxor 1\n") == {"pcmpeqd": 3, "pxor": 1}
    with pytest.raises(QueryError):
        parse_cost_model("cycles pxor 0\n")
    with pytest.raises(QueryError):
        parse_cost_model("latency pxor 2\n")


def test_run_broadcast_report():
    report = run_query(parse_query(shipped("broadcast")))
    first = report.solutions[0]
    assert first.length == 3 and first.verdict == "pass"
    assert report.exit_code == 0


def test_run_all_ones_two_solutions():
    report = run_query(parse_query(shipped("allones")).with_overrides(max_solutions=2))
    assert [s.length for s in report.solutions] == [1, 2]
    assert report.solutions[1].instrs == ["pxor xmm0, xmm0", "pcmpeqd xmm0, xmm0"]


def test_unsatisfiable_goal_reports_exhaustion():
    q = parse_query("registers xmm0\ngoal xmm0 = [7,7,7,7]\nmax_depth 2\n")
    report = run_query(q)
    assert report.solutions == [] and report.exhausted and report.exit_code == 2


def test_capacity_is_reported():
    q = parse_query(shipped("broadcast")).with_overrides(engine="bfs", max_states=1)
    report = run_query(q)
    assert report.capacity_exceeded and report.exit_code == 2


def test_unknown_allowed_mnemonic():
    q = parse_query("allow pshufd\ngoal xmm0 = [0,0,0,0]\n")
    with pytest.raises(QueryError):
        run_query(q)


def test_verification_can_be_disabled():
    report = run_query(parse_query(shipped("zero")).with_overrides(verify_samples=0))
    assert report.solutions[0].verdict == "skipped"


def test_failing_verification_sets_exit_code(monkeypatch):
    # Force a failing verdict; failed idioms must never reach the table.
    import idiom_forge.report as report_mod
    from idiom_forge.verify import Verdict

    monkeypatch.setattr(report_mod, "verify_sequence", lambda *a, **k: Verdict(False, 1, {}, 0, 0, 1, 2))
    report = run_query(parse_query(shipped("zero")))
    assert report.exit_code == 3
    assert emit(report, "table").strip().splitlines() == ["# idiom table: zero (ids)"]


def test_emit_asm():
    report = run_query(parse_query(shipped("zero")))
    body = [line for line in emit(report, "asm").splitlines() if not line.startswith(";")]
    assert body == ["pxor xmm0, xmm0"]
    for line in body:
        assert to_asm(parse_asm(line)) == line


def test_emit_table_empty():
    report = run_query(parse_query("registers xmm0\ngoal xmm0 = [7,7,7,7]\nmax_depth 1\nname never\n"))
    assert emit(report, "table") == "# idiom table: never (ids)\n"


def test_emit_table_lines():
    report = run_query(parse_query(shipped("allones")))
    assert emit(report, "table").splitlines()[1:] == [
        "idiom allones: pcmpeqd xmm0, xmm0",
        "idiom allones: pxor xmm0, xmm0; pcmpeqd xmm0, xmm0",
    ]


def test_json_round_trip():
    report = run_query(parse_query(shipped("allones")))
    data = json.loads(emit(report, "json", include_timing=True))
    assert Report.from_dict(data) == report
    assert "elapsed" not in json.loads(emit(report, "json"))["stats"]


def test_output_is_deterministic():
    q = parse_query(shipped("broadcast")).with_overrides(max_solutions=3, max_depth=4)
    outputs = {emit(run_query(q), "json") for _ in range(3)}
    assert len(outputs) == 1


def test_cost_engine_with_cost_model():
    q = parse_query(shipped("allones")).with_overrides(engine="cost", max_solutions=1)
    report = run_query(q, cost_model={"pcmpeqd": 3})
    assert report.solutions[0].instrs == ["pcmpeqd xmm0, xmm0"]
    assert report.solutions[0].total_cycles == 3


# --- CLI ----------------------------------------------------------------------


def test_cli_asm(capsys):
    assert main(["run", "--query", str(shipped_path("zero"))]) == 0
    assert "pxor xmm0, xmm0" in capsys.readouterr().out.splitlines()


def test_cli_overrides_and_out_file(tmp_path):
    out = tmp_path / "out.json"
    code = main([
        "run", "--query", str(shipped_path("allones")), "--engine", "bfs",
        "--max-solutions", "1", "--emit", "json", "--out", str(out), "--seed", "9",
    ])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["query"]["engine"] == "bfs" and data["query"]["seed"] == 9
    assert len(data["solutions"]) == 1


def test_cli_cost_model_and_isa(tmp_path, capsys):
    cost = tmp_path / "cost.txt"
    cost.write_text("cycles pcmpeqd 3\n")
    isa = tmp_path / "mini.isa"
    isa.write_text("inst pcmpeqd form=rr cycles=1\n  e3=(d3==s3) e2=(d2==s2) e1=(d1==s1) e0=(d0==s0)\n")
    code = main([
        "run", "--isa", str(isa), "--query", str(shipped_path("allones")),
        "--engine", "cost", "--cost-model", str(cost), "--emit", "table",
    ])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[1] == "idiom allones: pcmpeqd xmm0, xmm0"


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.q"
    bad.write_text("start xmm0 = _\ngoal xmm0 = [0,0,0,0]\n")
    assert main(["run", "--query", str(bad)]) == 1
    assert "wildcard" in capsys.readouterr().err
    never = tmp_path / "never.q"
    never.write_text("registers xmm0\ngoal xmm0 = [7,7,7,7]\nmax_depth 1\n")
    assert main(["run", "--query", str(never)]) == 2
    assert main(["run", "--query", str(tmp_path / "missing.q")]) == 1


def test_cli_batch_jobs(capsys):
    paths = [str(shipped_path(n)) for n in ("zero", "copy", "broadcast")]
    args = ["run", "--emit", "table"] + [a for p in paths for a in ("--query", p)]
    assert main(args) == 0
    serial = capsys.readouterr().out
    assert main(args + ["--jobs", "3"]) == 0
    assert capsys.readouterr().out == serial
    assert "idiom copy: movdqa xmm0, xmm1" in serial
