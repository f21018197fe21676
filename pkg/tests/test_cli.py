import json
import subprocess
import sys

import pytest

from painleve_soliton.cli import main


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = call(capsys, *argv)
    return code, json.loads(out)


def test_resonances_uno(capsys):
    code, rep = report(capsys, "resonances", "--system", "warped", "--dims", "5",
                       "--family", "uno")
    assert code == 0 and rep["schema"] == 1
    assert [r["iota"] for r in rep["result"]["roots"]] == ["-4", "-1", "0", "2"]
    assert rep["request"]["params"] == {"b0": "1"}


def test_resonances_bb(capsys):
    code, rep = report(capsys, "resonances", "--system", "bb", "--d2", "4")
    roots = {r["iota"]: r["multiplicity"] for r in rep["result"]["roots"]}
    assert code == 0 and roots == {"-2": 1, "-1": 1, "0": 3, "2": 1}


def test_resonances_caseI_residual(capsys):
    code, rep = report(capsys, "resonances", "--dims", "2,3", "--family", "caseI", "--l", "2")
    assert rep["result"]["residual"] == "iota^2 + 4*iota + 8"


def test_series_dos_lambda_zero(capsys):
    code, rep = report(capsys, "series", "--system", "warped", "--dims", "4", "--family", "dos",
                       "--sign", "minus", "--a0", "2", "--N", "10", "--h0")
    assert code == 0
    assert rep["result"]["lambda"] == "0" and rep["result"]["h0_projected"]
    assert all(c["coeff"] == "0" for c in rep["constraint_coefficients"])


def test_series_caseII_table(capsys):
    code, rep = report(capsys, "series", "--system", "warped", "--dims", "2,4",
                       "--family", "caseII", "--point", "-4/3,-1/3", "--N", "12")
    assert code == 0
    v = rep["result"]["variables"]
    coeff = lambda name, k: v[name][k]["coeff"]
    assert (coeff("x1", 2), coeff("u1", 2), coeff("u3", 2)) == ("-9/20", "3/20", "3/5")
    assert (coeff("u1", 4), coeff("u3", 4)) == ("-351/5600", "-243/700")


def test_series_leading_only(capsys):
    code, rep = report(capsys, "series", "--dims", "3", "--N", "0")
    assert code == 0
    assert all(len(terms) == 1 for terms in rep["result"]["variables"].values())


def test_series_resonance_override(capsys):
    code, rep = report(capsys, "series", "--dims", "3", "--N", "3", "--resonance", "2=1/2")
    assert rep["result"]["variables"]["u2"][2]["coeff"] == "1"


def test_validate_roundtrip_and_perturbation(capsys, tmp_path):
    path = tmp_path / "s.json"
    assert main(["series", "--dims", "3", "--h0", "--out", str(path)]) == 0
    code, rep = report(capsys, "validate", "--input", str(path))
    assert code == 0 and rep["result"]["passed"]
    code, rep = report(capsys, "validate", "--dims", "3", "--h0", "--perturb", "1")
    assert code == 4
    failed = [c["name"] for c in rep["result"]["checks"] if not c["passed"]]
    assert failed == ["constraint"]


def test_validate_equilibrium(capsys):
    code, rep = report(capsys, "validate", "--dims", "2,3", "--equilibrium")
    assert code == 0 and rep["result"]["passed"]


def test_validate_writes_trajectory(capsys, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, _ = report(capsys, "validate", "--dims", "4", "--family", "dos", "--h0",
                     "--trajectory-out", str(csv_path))
    assert code == 0
    assert csv_path.read_text().startswith("t,x1,x2,u1,u2\n")


def test_ellipsoid_commands(capsys):
    code, rep = report(capsys, "ellipsoid", "--dims", "7,7,7", "--bound", "20", "--moduli", "8")
    assert rep["result"]["points"] == [] and rep["result"]["obstructions"] == {"8": "obstructed"}
    code, rep = report(capsys, "ellipsoid", "--dims", "2,2", "--bound", "3")
    assert ["-1", "-1"] in rep["result"]["points"]
    code, rep = report(capsys, "ellipsoid", "--dims", "4", "--bound", "1")
    assert rep["result"]["points"] == [["-1"], ["1"]]


@pytest.mark.parametrize("argv", [
    ["series", "--dims", "1"],
    ["series", "--dims", "3", "--b0", "0.5"],
    ["series", "--dims", "3", "--family", "dos"],
    ["series", "--dims", "2,2", "--family", "caseII", "--point", "1,1/2"],
    ["series", "--dims", "3", "--param", "zz=1"],
    ["resonances", "--system", "bb", "--d2", "3"],
    ["validate", "--input", "/nonexistent.json"],
])
def test_invalid_input_exit_code(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_reports_are_deterministic(capsys):
    argv = ["series", "--dims", "2,4", "--family", "caseII", "--point", "-4/3,-1/3", "--N", "6"]
    _, first, _ = call(capsys, *argv)
    _, second, _ = call(capsys, *argv)
    assert first == second


def test_text_format(capsys):
    code, out, _ = call(capsys, "resonances", "--dims", "5", "--format", "text")
    assert code == 0 and "top" in out and "det X(iota)" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "painleve_soliton", "ellipsoid", "--dims", "4",
                           "--bound", "1"], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["result"]["count"] == 2
