import csv
import io
import json
import math
import subprocess
import sys

import pytest

from goldens import COEFFS
from subbs import GammaPayoff, payoff_value
from subbs.cli import COLUMNS, SCHEMA_VERSION, main

REF = ["--k", "3", "--r", "0.05", "--sigma", "0.2", "--A", "1", "--alpha", "0.05", "--p", "2", "--T", "1"]
FAST_MC = ["--paths", "4000", "--steps", "50", "--seed", "5"]
FAST_FD = ["--n-space", "600", "--n-time", "100"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_price_json_single_record(capsys):
    code, out, _ = run(["price", *REF, "--t", "0", "--s", "60", "--terms", "64", "--method", "spectral",
                        "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["command"] == "price"
    assert doc["config_echo"]["k"] == 3.0
    (row,) = doc["rows"]
    assert {"t", "S", "value", "method", "n_terms", "tail_ratio"} <= set(row)
    assert row["method"] == "spectral" and row["n_terms"] == 64 and row["S"] == 60.0
    assert row["value"] == pytest.approx(0.24320044842937699, rel=1e-12)


def test_price_at_maturity_equals_payoff(capsys):
    code, out, _ = run(["price", *REF, "--t", "1", "--s", "60", "--format", "json"], capsys)
    assert code == 0
    value = json.loads(out)["rows"][0]["value"]
    assert value == pytest.approx(payoff_value(GammaPayoff(1.0, 0.05, 2.0), 60.0), rel=1e-3)


def test_k_two_rejected(capsys):
    code, out, err = run(["price", *REF, "--k", "2", "--s", "60"], capsys)
    assert code == 2
    assert "K_OUT_OF_RANGE" in err
    assert out == ""


def test_sigma_zero_rejected_before_validation(capsys):
    code, out, err = run(["validate", *REF, "--sigma", "0"], capsys)
    assert code == 2
    assert "NONPOSITIVE_SIGMA" in err
    assert out == ""


def test_coeffs_single_row(capsys):
    code, out, _ = run(["coeffs", *REF, "--terms", "1", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["n"] == "0"


def test_coeffs_match_goldens(capsys):
    code, out, _ = run(["coeffs", *REF, "--terms", "9", "--format", "json"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["n"] for r in rows] == list(range(9))
    for r, ref in zip(rows, COEFFS):
        assert r["raw_coeff"] == pytest.approx(ref, rel=1e-12)
        assert r["discounted_coeff"] == pytest.approx(ref * math.exp(-r["decay_rate"]), rel=1e-14)


def test_coeffs_linear_in_a(capsys):
    _, one, _ = run(["coeffs", *REF, "--terms", "16", "--format", "json"], capsys)
    _, two, _ = run(["coeffs", *REF, "--A", "2", "--terms", "16", "--format", "json"], capsys)
    for a, b in zip(json.loads(one)["rows"], json.loads(two)["rows"]):
        assert b["raw_coeff"] == 2.0 * a["raw_coeff"]


def test_converge_nonincreasing_and_degenerate(capsys):
    code, out, _ = run(["converge", *REF, "--terms-list", "8", "16", "32", "64", "--s", "60", "--format", "json"],
                       capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    errs = [r["reconstruction_error"] for r in rows]
    assert errs == sorted(errs, reverse=True)
    largest = rows[-1]
    assert largest["delta_vs_largest"] == 0.0
    assert largest["rel_diff_fd"] < 0.01

    code, out, _ = run(["converge", *REF, "--terms-list", "16", "--s", "60", "--format", "json"], capsys)
    (row,) = json.loads(out)["rows"]
    assert row["delta_vs_largest"] == 0.0


def test_validate_tiny_n_fails_reconstruction(capsys):
    code, out, err = run(["validate", *REF, "--terms", "2", *FAST_MC, *FAST_FD, "--format", "json"], capsys)
    assert code == 4
    report = json.loads(out)["report"]
    assert report["passed"] is False
    check = next(c for c in report["checks"] if c["name"] == "maturity_reconstruction")
    assert check["passed"] is False and check["measured"] > check["tolerance"]
    assert "maturity_reconstruction" in err


@pytest.mark.slow
def test_validate_reference_configuration_passes(capsys):
    code, out, err = run(["validate", *REF, "--format", "json"], capsys)
    report = json.loads(out)["report"]
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert code == 0, failed


def test_validate_report_fields(capsys):
    code, out, _ = run(["validate", *REF, "--terms", "8", *FAST_MC, *FAST_FD, "--format", "csv"], capsys)
    assert code in (0, 4)
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == COLUMNS["validate"]
    assert {r[1] for r in rows[1:]} <= {"true", "false"}


@pytest.mark.parametrize("method,extra", [("spectral", []), ("crank_nicolson", FAST_FD), ("monte_carlo", FAST_MC)])
def test_price_methods_csv_columns(capsys, method, extra):
    code, out, _ = run(["price", *REF, "--method", method, *extra, "--s", "30", "60", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(COLUMNS["price"])
    assert len(lines) == 3
    assert all(line.split(",")[3] == method for line in lines[1:])


def test_csv_uses_twelve_significant_digits(capsys):
    _, out, _ = run(["price", *REF, "--s", "60", "--format", "csv"], capsys)
    value = out.splitlines()[1].split(",")[2]
    assert value == format(0.24320044842937699, ".12g")


def test_json_uses_seventeen_significant_digits(capsys):
    _, out, _ = run(["price", *REF, "--s", "60", "--format", "json"], capsys)
    assert '"value": ' + format(json.loads(out)["rows"][0]["value"], ".17g") in out


@pytest.mark.parametrize("command,extra", [
    ("price", ["--method", "monte_carlo", *FAST_MC]),
    ("coeffs", []),
    ("converge", FAST_FD),
    ("validate", ["--terms", "8", *FAST_MC, *FAST_FD]),
])
@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_byte_deterministic(capsys, command, extra, fmt):
    argv = [command, *REF, *extra, "--format", fmt]
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first[1] == second[1]
    assert first[0] == second[0]


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference run\nk = 3\nterms=16\ns = 30, 60\nformat=csv\nalpha = 0.05\n")
    code, out, _ = run(["price", "--config", str(cfg)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 3 and lines[1].split(",")[4] == "16"
    # a flag beats the file
    code, out, _ = run(["price", "--config", str(cfg), "--terms", "8"], capsys)
    assert out.splitlines()[1].split(",")[4] == "8"


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(["price", "--config", str(cfg)], capsys)
    assert code == 2 and "CONFIG_KEY" in err


def test_missing_config_is_io_error(tmp_path, capsys):
    code, _, err = run(["price", "--config", str(tmp_path / "missing.cfg")], capsys)
    assert code == 1 and "IO_ERROR" in err


def test_unwritable_output_is_io_error(tmp_path, capsys):
    code, _, err = run(["price", *REF, "--s", "60", "--output", str(tmp_path / "no" / "such" / "dir.json")], capsys)
    assert code == 1


def test_output_file(tmp_path, capsys):
    target = tmp_path / "prices.json"
    code, out, _ = run(["price", *REF, "--s", "60", "--output", str(target)], capsys)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["rows"][0]["S"] == 60.0


def test_time_after_maturity_is_parameter_error(capsys):
    code, _, err = run(["price", *REF, "--t", "2", "--s", "60"], capsys)
    assert code == 2 and "T_AFTER_MATURITY" in err


@pytest.mark.parametrize("extra,code", [(["--r", "1e10"], "NONFINITE_PRICE"),
                                         (["--A", "1e308", "--p", "50", "--terms", "200"], "NONFINITE_COEFFICIENT")])
def test_numerical_failure_exit_code(capsys, extra, code):
    rc, out, err = run(["price", *REF, *extra, "--s", "60", "--format", "csv"], capsys)
    assert rc == 3 and code in err
    assert out == ""


def test_node_shortage_exit_code(capsys):
    code, _, err = run(["price", *REF, "--quad", "gauss", "--quad-nodes", "10", "--terms", "64"], capsys)
    assert code == 2 and "NODE_SHORTAGE" in err


def test_bad_flag_value_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["price", "--k", "three"])
    assert exc.value.code == 2


def test_pricer_log_controls_stderr(monkeypatch, capsys):
    monkeypatch.setenv("PRICER_LOG", "warn")
    _, out_warn, err_warn = run(["price", *REF, "--quad", "gauss", "--quad-nodes", "200", "--terms", "8",
                                 "--s", "60"], capsys)
    monkeypatch.setenv("PRICER_LOG", "error")
    _, out_err, err_err = run(["price", *REF, "--quad", "gauss", "--quad-nodes", "200", "--terms", "8",
                               "--s", "60"], capsys)
    assert "does not resolve" in err_warn
    assert err_err == ""
    assert out_warn == out_err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subbs.cli", "price", *REF, "--s", "60", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith(",".join(COLUMNS["price"]))
