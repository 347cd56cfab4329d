import json
import subprocess
import sys

import jsonschema
import pytest

from helpers import KBS
from ontosep.cli import main
from ontosep.syntax import REPORT_SCHEMA, parse_formula

VOTES, EXM11 = str(KBS / "votes.okb"), str(KBS / "exm11.okb")
K1, K2 = str(KBS / "citizens_k1.okb"), str(KBS / "citizens_k2.okb")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def json_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_strong_votes_is_separable(capsys):
    code, out, _ = run(capsys, "check", "--task", "strong", "--format", "json", VOTES)
    assert code == 0
    (rep,) = json_lines(out)
    assert rep["status"] == "separable" and rep["separator"]["verified"]
    assert rep["input"] == VOTES


def test_nonprojective_self_loop_is_inseparable(capsys):
    code, out, _ = run(capsys, "check", "--task", "weak-nonprojective", EXM11)
    assert code == 1
    assert "inseparable" in out


def test_missing_file_is_an_input_error(capsys):
    code, _, err = run(capsys, "check", str(KBS / "absent.okb"))
    assert code == 2 and "absent.okb" in err


def test_malformed_file_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.okb"
    bad.write_text("database { A(a }\npositive { a }\nnegative { a }")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 2 and ":1:" in err


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as e:
        main(["check", "--task", "bogus", VOTES])
    assert e.value.code == 2
    capsys.readouterr()


def test_verify_person(capsys):
    code, out, _ = run(capsys, "verify", "--formula", "Person", K1)
    assert code == 0 and out.rstrip().endswith("separates")
    code, out, _ = run(capsys, "verify", "--formula", "Person", K2)
    assert code == 1 and "does not separate" in out
    code, _, _ = run(capsys, "verify", "--formula", "top", K1)
    assert code == 1


def test_verify_query_and_strong_mode(capsys, tmp_path):
    f = tmp_path / "q.txt"
    f.write_text("q(x) :- R(x,x)")
    assert run(capsys, "verify", "--formula-file", str(f), EXM11)[0] == 0
    assert run(capsys, "verify", "--mode", "strong", "--formula", "exists votes. Left", VOTES)[0] == 0
    code, _, err = run(capsys, "verify", "--mode", "strong", "--formula-file", str(f), EXM11)
    assert code == 2 and "concept" in err
    code, _, err = run(capsys, "verify", "--formula", "q(x) :- A(y)", EXM11)
    assert code == 2


def test_json_reports_match_schema_and_are_deterministic(capsys):
    files = sorted(str(p) for p in KBS.glob("*.okb"))
    first = json_lines(run(capsys, "check", "--format", "json", "--verify", *files)[1])
    second = json_lines(run(capsys, "check", "--format", "json", "--verify", *files)[1])
    assert len(first) == 3 * len(files)
    for a, b in zip(first, second):
        jsonschema.validate(a, REPORT_SCHEMA)
        a["stats"].pop("time_ms"), b["stats"].pop("time_ms")
        assert a == b
    for rep in first:
        if rep["separator"]:
            parse_formula(rep["separator"]["text"])


def test_oracle_cross_check(capsys):
    code, out, _ = run(capsys, "check", "--task", "strong", "--format", "json",
                       "--oracle-domain", "2", VOTES)
    assert code == 0
    assert json_lines(out)[0]["oracle"] == {"domain_bound": 2, "model_found": True}


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "--max-domain", "1", EXM11)
    assert code == 0
    assert json.loads(out) == {"max_domain": 1, "models": 1, "budget_exhausted": False,
                               "reasoner_satisfiable": True}


def test_resource_limit_exit_code(capsys):
    code, _, err = run(capsys, "check", "--max-closure", "1", VOTES)
    assert code == 4 and "resource limit" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ontosep", "check", "--task", "strong", VOTES],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "[strong]" in proc.stdout and "separable" in proc.stdout
