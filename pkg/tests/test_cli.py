from __future__ import annotations

import json
import subprocess
import sys

from monoidprog.cli import Report, cmd_analyze, cmd_da_experiments, cmd_nontameness_j, main
from monoidprog.programs import Program
from monoidprog.reglang import syntactic_stamp_of


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


# -- reports --------------------------------------------------------------------------------

def test_report_round_trip_and_verdict():
    rep = Report("demo")
    rep.add("first", True, value=frozenset({2, 1}))
    rep.add("note", None, text="x")
    assert rep.ok
    data = json.loads(rep.to_json())
    assert data["items"][0]["value"] == [1, 2] and data["ok"] is True
    again = Report.from_dict(data)
    assert again.title == "demo" and again.ok
    rep.add("second", False)
    assert not rep.ok
    text = rep.to_text()
    assert "[PASS] first" in text and "[FAIL] second" in text and "[INFO] note" in text


def test_cmd_analyze_da_language():
    rep = cmd_analyze("a(a+b)*")
    byname = {item["name"]: item for item in rep.items}
    assert any("DA" in name for name in byname)
    assert rep.ok


def test_cmd_analyze_b2_language():
    rep = cmd_analyze("(ab)*", alphabet="ab")
    text = rep.to_text()
    assert "B2" in text


def test_cmd_reports_pass():
    assert cmd_nontameness_j(6).ok
    assert cmd_da_experiments(k_max=1, n=4, fooling_n=30, runs=2).ok


# -- subcommands ------------------------------------------------------------------------------

def test_analyze_command(capsys):
    code, data = run_json(capsys, "analyze", "a(a+b)*", "--json")
    assert code == 0 and data["ok"]
    code, out, _ = run(capsys, "analyze", "(c+ab)*")
    assert code == 0 and "(c+ab)*" in out


def test_analyze_bad_regex_is_usage_error(capsys):
    code, _, err = run(capsys, "analyze", "(a+")
    assert code == 2 and "error" in err


def test_missing_subcommand_is_usage_error(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "program", "build", "nope", "--n", "3")[0] == 2


def test_program_build_eval_check(tmp_path, capsys):
    path = tmp_path / "j.json"
    assert main(["program", "build", "jtrick", "--n", "5", "--out", str(path)]) == 0
    data = json.loads(path.read_text())
    assert data["range"] == 5 and data["accept"]
    code, out = run_json(capsys, "program", "eval", "--program", str(path), "abacc")
    assert code == 0 and out["accepted"] is True
    code, out = run_json(capsys, "program", "eval", "--program", str(path), "abbcc")
    assert out["accepted"] is False
    code, rep = run_json(capsys, "program", "check", "--program", str(path), "--regex", "(a+b)*ac~", "--json")
    assert code == 0 and rep["ok"]
    code, rep = run_json(capsys, "program", "check", "--program", str(path), "--regex", "(a+b+c)*", "--json")
    assert code == 1 and not rep["ok"] and rep["items"][0]["witness"]
    code, _, err = run(capsys, "program", "eval", "--program", str(path), "ab")
    assert code == 2 and "error" in err


def test_program_normalize(tmp_path, capsys):
    phi, F = syntactic_stamp_of("(aa)*", "ab")
    P = Program(3, ("a", "b"), phi.monoid, ((1, (1, 0)), (2, (1, 0)), (1, (1, 0)), (3, (1, 0))))
    src = tmp_path / "p.json"
    dst = tmp_path / "q.json"
    src.write_text(json.dumps(P.to_dict(sorted(F))))
    assert main(["program", "normalize", "--program", str(src), "--out", str(dst)]) == 0
    Q = Program.from_dict(json.loads(dst.read_text()))
    # the two position-1 instructions cancel in the group part and are dropped
    assert [p for p, _ in Q.instructions] == [2, 3]
    for w in ("aaa", "aba", "bbb", "abb"):
        assert Q.eval(w) == P.eval(w)


def test_program_build_pk(tmp_path, capsys):
    kset = tmp_path / "s.json"
    kset.write_text(json.dumps({"n": 3, "k": 1, "tuples": [[2]]}))
    out = tmp_path / "pk.json"
    assert main(["program", "build", "pk", "--n", "3", "--kset", str(kset), "--out", str(out)]) == 0
    for word, expected in (("010", True), ("011", True), ("100", False), ("000", False)):
        code, res = run_json(capsys, "program", "eval", "--program", str(out), word)
        assert res["accepted"] is expected
    assert main(["program", "build", "pk", "--n", "4", "--k", "2", "--seed", "3"]) == 0


def test_program_with_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "program", "eval", "--program", str(tmp_path / "none.json"), "a")
    assert code == 2


def test_sum_commands(capsys):
    expr = "SPLIT(STAR{b}, 'a', STAR{a,b}, L)"
    code, data = run_json(capsys, "sum", "member", expr, "ba")
    assert code == 0 and data["member"] is True
    code, data = run_json(capsys, "sum", "member", expr, "bb")
    assert data["member"] is False
    code, data = run_json(capsys, "sum", "regex", expr)
    assert code == 0 and "a" in data["regex"]
    code, data = run_json(capsys, "sum", "quotient", expr, "--left", "b")
    assert data["side"] == "left" and data["union"]
    code, data = run_json(capsys, "sum", "quotient", expr, "--right", "a")
    assert data["side"] == "right"
    code, data = run_json(capsys, "sum", "quotient", "STAR{a}", "--left", "b")
    assert data["union"] == []
    code, data = run_json(capsys, "sum", "inverse", "STAR{a,b}", "--map", "x=ab,y=c")
    assert data["union"] == ["STAR{x}"]
    assert run(capsys, "sum", "member", "SPLIT(", "a")[0] == 2


def test_fooling_command(tmp_path, capsys):
    phi, _ = syntactic_stamp_of("a(a+b)*", "ab")
    monoid = tmp_path / "m.json"
    monoid.write_text(json.dumps(phi.monoid.to_dict()))
    code, data = run_json(capsys, "fooling", "--delta", "c,ab", "--monoid", str(monoid), "--n", "30")
    assert code == 0
    assert data["memberships"] == [True, False] and data["outputs"][0] == data["outputs"][1]
    code, data = run_json(capsys, "fooling", "--delta", "a,b", "--monoid", str(monoid), "--n", "20", "--mod", "2")
    assert code == 0 and data["edits"] == 1
    code, data = run_json(capsys, "fooling", "--delta", "c,ab", "--monoid", str(monoid), "--n", "4")
    assert code == 1 and "insufficient_range" in data
    assert run(capsys, "fooling", "--delta", "c,ab")[0] == 2


def test_fooling_rejects_non_da_monoid(tmp_path, capsys):
    phi, _ = syntactic_stamp_of("(ab)*", "ab")
    monoid = tmp_path / "m.json"
    monoid.write_text(json.dumps(phi.monoid.to_dict()))
    assert run(capsys, "fooling", "--delta", "c,ab", "--monoid", str(monoid), "--n", "20")[0] == 2


def test_count_command(capsys):
    code, data = run_json(capsys, "count", "--i", "2", "--n", "3", "--l", "2")
    assert code == 0 and data["bound"] == 9216
    code, data = run_json(capsys, "count", "--i", "1", "--n", "2", "--l", "1", "--enumerate")
    assert code == 0 and data["enumerated"] == 2 and data["within_bound"]


def test_report_commands(capsys):
    code, data = run_json(capsys, "report", "nontameness-j", "--n-max", "5", "--json")
    assert code == 0 and data["ok"]
    code, out, _ = run(capsys, "report", "da", "--k-max", "1", "--n", "4", "--fooling-n", "30", "--runs", "1")
    assert code == 0 and "PASS" in out and "FAIL" not in out


def test_resource_cap_is_exit_two(capsys):
    assert run(capsys, "analyze", "(a+b)*a(a+b)(a+b)(a+b)(a+b)(a+b)(a+b)", "--monoid-cap", "8")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "monoidprog", "count", "--i", "1", "--n", "3", "--l", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["bound"] == 18
    proc = subprocess.run([sys.executable, "-m", "monoidprog", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.1.0"
