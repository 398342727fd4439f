import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

import oracles
from subspacecomp.cli import main
from subspacecomp.source import FamilySpec, load_distribution, make_family

h = oracles.h
EX1 = "example1:p1=0.1,p2=0.2"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def record(text):
    rows = list(csv.reader(io.StringIO(text)))
    return dict(zip(rows[0], rows[1]))


def test_analyze_example1(capsys):
    code, out, _ = run(capsys, "analyze", "--family", EX1, "--target", "1111", "--format", "csv")
    assert code == 0
    rec = record(out)
    assert float(rec["r_ss_sum"]) == pytest.approx(4 * h(0.2), abs=1e-9)
    assert float(rec["r_nc_sum"]) == pytest.approx(2 * h(0.1) + 2 * h(0.2), abs=1e-9)
    assert float(rec["r_cc_sum"]) == pytest.approx(4 * h(0.26), abs=1e-9)


def test_analyze_uniform_collapse(capsys):
    code, out, _ = run(capsys, "analyze", "--family", "uniform:q=2,m=3", "--target", "111", "--format", "csv")
    rec = record(out)
    assert code == 0
    assert float(rec["r_cc_sym"]) == float(rec["r_ss_sym"]) == 1.0
    assert float(rec["r_nc_sum"]) == float(rec["r_sw_sum"]) == 3.0


def test_text_and_csv_carry_identical_numbers(capsys):
    args = ["analyze", "--family", EX1, "--target", "1100;0110", "--target", "0011"]
    _, text, _ = run(capsys, *args)
    _, csvout, _ = run(capsys, *args, "--format", "csv")
    for key, val in record(csvout).items():
        if key != "target" and val:
            assert f"{key}" in text and val in text


def test_malformed_pmf_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"q": 2, "m": 2, "pmf": [0.3, 0.2, 0.2, 0.2]}))
    code, _, err = run(capsys, "chain", "--input", str(path))
    assert code == 2 and "normaliz" in err


@pytest.mark.parametrize("argv", [
    ["analyze", "--family", EX1],
    ["analyze", "--family", EX1, "--target", "11"],
    ["analyze", "--family", EX1, "--target", "1100;1100"],
    ["chain", "--family", "nosuch:a=1"],
    ["chain"],
    ["chain", "--input", "/nonexistent.json"],
    ["simulate", "--family", EX1, "--target", "1111", "--n", "8"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_json_syntax_error_names_position(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"q": 2,\n  "m" 2}')
    code, _, err = run(capsys, "chain", "--input", str(path))
    assert code == 2 and "line 2" in err


def test_budget_error_exit_3(capsys):
    code, _, err = run(capsys, "simulate", "--family", EX1, "--target", "1111", "--n", "40", "--rate", "0.1",
                       "--trials", "1")
    assert code == 3 and "budget" in err


def test_consistency_error_exit_4(capsys, tmp_path):
    pmf = np.array([0.0499, 0.1758, 0.1494, 0.4573, 0.002, 0.0219, 0.0752, 0.0686])
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"q": 2, "m": 3, "pmf": (pmf / pmf.sum()).tolist()}))
    code, _, err = run(capsys, "chain", "--input", str(path), "--tolerance", "0.1")
    assert code == 4 and "not closed" in err


def test_chain_outputs(capsys):
    _, out, _ = run(capsys, "chain", "--family", EX1, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["basis"] for r in rows] == ["1010;0110", "1001;0101;0011", "1000;0100;0010;0001"]
    assert [float(r["H_N"]) for r in rows] == pytest.approx([h(0.1), h(0.2), 1.0], abs=1e-11)
    _, out, _ = run(capsys, "chain", "--family", "opt_ss:m=4,p=0.11", "--format", "csv")
    assert len(out.splitlines()) == 3
    _, out, _ = run(capsys, "chain", "--family", "uniform:q=3,m=2", "--format", "csv")
    assert len(out.splitlines()) == 2


def test_simulate_is_deterministic(capsys, tmp_path):
    args = ["simulate", "--family", "opt_ss:m=2,p=0.11", "--target", "11", "--n", "10", "--rate", "1.3",
            "--relative", "--trials", "200", "--seed", "7", "--format", "csv"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "scheme,n,k,rate_bits,trials,failures,pe,ci_lo,ci_hi"


@pytest.mark.parametrize("scheme,extra", [("ss", []), ("side", ["--side", "1100;0110"]), ("nc", [])])
def test_simulate_schemes(capsys, scheme, extra):
    code, out, _ = run(capsys, "simulate", "--family", EX1, "--target", "1100;0110;0011", "--scheme", scheme,
                       *extra, "--n", "8", "--trials", "50", "--format", "csv", *([] if scheme == "nc" else ["--rate", "0.9"]))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[-1]["scheme"] == scheme
    if scheme == "nc":
        assert [r["scheme"] for r in rows] == ["nc-stage1", "nc-stage2", "nc"]


def test_sweep_rows_and_trend_flag(capsys):
    code, out, err = run(capsys, "sweep", "--family", "opt_ss:m=2,p=0.11", "--target", "11", "--n", "12",
                         "--rate", "0.7,1.0,1.3", "--relative", "--trials", "400", "--format", "csv")
    assert code == 0
    assert len(out.splitlines()) == 4
    assert "monotone=true" in err


def test_families_emit_round_trip(capsys, tmp_path):
    path = tmp_path / "ex1.json"
    assert main(["families", "--emit", EX1, "--out", str(path)]) == 0
    assert np.array_equal(load_distribution(path).pmf, make_family(FamilySpec.parse(EX1)).pmf)
    code, out, _ = run(capsys, "families")
    assert code == 0 and "example1" in out and "opt_ss" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "subspacecomp", "chain", "--family", "uniform:q=2,m=2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "H_N" in res.stdout
