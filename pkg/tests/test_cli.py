import csv
import io
import json
from collections import Counter

import pytest

from ethica.cli import main


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return _run


def rows(path_or_text):
    text = path_or_text if isinstance(path_or_text, str) else path_or_text.read_text()
    return list(csv.DictReader(io.StringIO(text)))


# -- validate / resolve ------------------------------------------------------

def test_validate_ok(run, desk):
    code, out, _ = run("validate", "--cdt", desk / "cdt.tree", "--ert", desk / "ert.tree")
    assert code == 0 and out.count(": ok") == 2


def test_validate_attribute_with_children(run, tmp_path):
    bad = tmp_path / "bad.tree"
    bad.write_text("root r\n  dim d\n    val x\n      attr a\n        val y\n")
    code, _, err = run("validate", "--cdt", bad)
    assert code == 1 and "leaves" in err


def test_validate_missing_file(run, tmp_path):
    code, _, err = run("validate", "--cdt", tmp_path / "nope.tree")
    assert code == 2 and "error" in err


def test_resolve(run, desk):
    code, out, _ = run("resolve", "--cdt", desk / "cdt.tree",
                       "--context", "role=clerk; action=promotion",
                       "--ert", desk / "ert.tree", "--facet", "equity", "--affected", "gender")
    assert code == 0
    data = json.loads(out)
    assert data["context"] == "action=promotion; role=clerk"
    assert data["ethical_context"]["facet"] == "fairness/equity"


def test_resolve_sibling_values(run, desk):
    code, _, err = run("resolve", "--cdt", desk / "cdt.tree",
                       "--context", "role=clerk; role=manager")
    assert code == 1 and "mutually exclusive" in err


# -- analyze ---------------------------------------------------------------------

def test_analyze_flags_managers(run, desk, desk_args):
    code, out, _ = run("analyze", *desk_args, "--context", "action=promotion; role=clerk",
                       "--affected", "gender")
    assert code == 0
    report = json.loads(out)
    e2 = report["tables"]["E2"]["attributes"][0]["disparity"]
    assert e2["ratio"] == "0.2" and e2["flagged"] is True


def test_analyze_balanced_has_no_flags(run, desk, desk_args):
    code, out, _ = run("analyze", *desk_args, "--context", "action=promotion; role=worker",
                       "--affected", "gender")
    assert code == 0
    tables = json.loads(out)["tables"].values()
    flags = [e["disparity"]["flagged"] for t in tables for e in t["attributes"]]
    assert flags and not any(flags)


def test_analyze_unknown_column(run, desk_args):
    code, _, err = run("analyze", *desk_args, "--context", "action=promotion; role=clerk",
                       "--affected", "shoe_size")
    assert code == 1 and "shoe_size" in err


def test_analyze_no_matching_view(run, desk, tmp_path, desk_args):
    views = tmp_path / "v.txt"
    views.write_text('view only\nwhen action=dismissal\ndef E1 = EMPLOYEE\n')
    args = list(desk_args)
    args[args.index("--views") + 1] = str(views)
    code, _, err = run("analyze", *args, "--context", "action=promotion", "--affected", "gender")
    assert code == 1 and "no view binding" in err


# -- transform -------------------------------------------------------------------

def transform(run, desk, desk_args, tmp_path, context, facet, affected, *extra):
    out = tmp_path / "ev.csv"
    code, stdout, err = run("transform", *desk_args, "--ert", desk / "ert.tree",
                            "--context", context, "--facet", facet, "--affected", affected,
                            "--out", out, "--log", tmp_path / "run.jsonl", *extra)
    return code, out, stdout, err


def test_transform_c(run, desk, desk_args, tmp_path):
    code, out, stdout, _ = transform(run, desk, desk_args, tmp_path,
                                     "action=promotion; role=clerk", "fairness/equity",
                                     "gender", "--params", desk / "params_equity.json")
    assert code == 0
    ev = rows(out)
    assert len(ev) == 24 and Counter(r["Gender"] for r in ev) == {"m": 12, "f": 12}
    record_id = stdout.strip()
    code, text, _ = run("explain", "--log", tmp_path / "run.jsonl", "--id", record_id)
    assert code == 0 and "p=2" in text and "ratio 0.2" in text


def test_transform_c1b(run, desk, desk_args, tmp_path):
    code, out, _, _ = transform(run, desk, desk_args, tmp_path,
                                "action=promotion; role=clerk", "fairness/equality", "gender")
    assert code == 0
    header = out.read_text().splitlines()[0].split(",")
    assert "Gender" not in header and "PregnancyCount" not in header
    assert len(rows(out)) == 40


def test_transform_c4(run, desk, desk_args, tmp_path):
    code, out, _, _ = transform(run, desk, desk_args, tmp_path,
                                "action=recruitment; role=manager", "privacy", "race")
    assert code == 0
    header = out.read_text().splitlines()[0].split(",")
    assert "Race" not in header and "Gender" in header


def test_transform_to_stdout(run, desk, desk_args):
    code, stdout, err = run("transform", *desk_args, "--ert", desk / "ert.tree",
                            "--context", "action=promotion; role=clerk",
                            "--facet", "fairness/equality", "--affected", "gender")
    assert code == 0 and stdout.startswith("pID,InstName,") and err == ""


def test_transform_weights_column(run, desk, desk_args, tmp_path):
    code, out, _, _ = transform(run, desk, desk_args, tmp_path,
                                "action=promotion; role=clerk", "fairness/equity",
                                "famsituation", "--weights", "FamSituation=widowed:2")
    assert code == 0
    ev = rows(out)
    assert list(ev[0])[-1] == "__weight"
    assert {r["FamSituation"]: r["__weight"] for r in ev}["widowed"] == "2"


def test_transform_failure_exit_1(run, desk, desk_args, tmp_path):
    code, out, _, err = transform(run, desk, desk_args, tmp_path,
                                  "action=promotion; role=clerk", "fairness/equity", "gender",
                                  "--pmin", "9", "--disadvantaged", "f")
    assert code == 1 and "no qualifying disadvantaged" in err
    assert not out.exists()
    record = json.loads((tmp_path / "run.jsonl").read_text())
    assert record["status"] == "failed"


def test_transform_unknown_affected(run, desk, desk_args, tmp_path):
    code, _, _, err = transform(run, desk, desk_args, tmp_path,
                                "action=promotion; role=clerk", "fairness/equity", "salary")
    assert code == 1 and "not in the ERT" in err


def test_transform_missing_data_dir(run, desk, desk_args, tmp_path):
    args = list(desk_args)
    args[args.index("--data") + 1] = str(tmp_path / "missing")
    code, _, _ = run("transform", *args, "--ert", desk / "ert.tree",
                     "--context", "action=promotion; role=clerk",
                     "--facet", "fairness/equality", "--affected", "gender")
    assert code == 2


def test_bad_params_file(run, desk, desk_args, tmp_path):
    params = tmp_path / "p.json"
    params.write_text('{"pmin": 3, "colour": "red"}')
    code, _, _, err = transform(run, desk, desk_args, tmp_path,
                                "action=promotion; role=clerk", "fairness/equity", "gender",
                                "--params", params)
    assert code == 1 and "colour" in err


def test_log_path_from_environment(run, desk, desk_args, tmp_path, monkeypatch):
    monkeypatch.setenv("ETHICA_LOG", str(tmp_path / "env.jsonl"))
    code, _, err = run("transform", *desk_args, "--ert", desk / "ert.tree",
                       "--context", "action=promotion; role=clerk",
                       "--facet", "fairness/equality", "--affected", "gender")
    assert code == 0 and err.strip().startswith("000001-")
    assert (tmp_path / "env.jsonl").exists()


def test_priority_shares(run, desk, desk_args, tmp_path):
    code, out, _, _ = transform(run, desk, desk_args, tmp_path,
                                "action=promotion; role=clerk", "fairness/equity", "gender",
                                "--params", desk / "params_equity.json",
                                "--shares", "fairness/equity=60,privacy=40", "-n", "10")
    assert code == 0
    ev = rows(out)
    assert len(ev) == 10 and "Gender" not in ev[0]
    assert len({r["pID"] for r in ev}) == 10
    record = json.loads((tmp_path / "run.jsonl").read_text())
    assert record["transform"]["allocation"]["counts"] == [6, 4]
