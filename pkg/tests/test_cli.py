import csv
import io
import json
import math

import numpy as np
import pytest

from flosfading.cli import main
from flosfading.flos import FLoSParams, pdf
from flosfading.metrics import outage_asymptotic, outage_probability
from flosfading.prony import ExpSumFit
from oracles import physical_pdf


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, np.array([[float(v) for v in r] for r in reader])


def test_pdf_example(capsys):
    code, out, _ = run(capsys, "pdf", "--gamma-bar-db", "0", "--K-db", "10", "--lambda", "5",
                       "--k", "2", "--x-max", "6", "--points", "200")
    assert code == 0
    header, data = rows(out)
    assert header == ["x", "pdf"] and data.shape == (200, 2)
    assert "\r" not in out
    x = data[57, 0]
    assert data[57, 1] == pytest.approx(physical_pdf(1.0, 10.0, 2.0, 5.0, 1 / 7, x), rel=1e-10)


def test_floats_round_trip(capsys):
    _, out, _ = run(capsys, "pdf", "--K", "3", "--k", "1.5", "--x-max", "2", "--points", "7")
    _, data = rows(out)
    p = FLoSParams(1.0, 3.0, 1.5)
    assert np.array_equal(data[:, 1], pdf(p, data[:, 0]))


def test_op_fig4_preset(capsys):
    code, out, _ = run(capsys, "op", "--preset", "fig4", "--lambda", "0,2,5")
    assert code == 0
    header, data = rows(out)
    assert header == ["snr_db", "op_lambda=0", "op_lambda=0_asymp", "op_lambda=2",
                      "op_lambda=2_asymp", "op_lambda=5", "op_lambda=5_asymp"]
    assert data.shape == (51, 7)
    p = FLoSParams(10.0, 10 ** 1.3, 1.5, lam=2.0)
    assert data[10, 3] == pytest.approx(outage_probability(p, 1.0), rel=1e-14)
    assert data[10, 4] == pytest.approx(outage_asymptotic(p, 1.0), rel=1e-14)
    assert np.all(data[:, 1] >= data[:, 3]) and np.all(data[:, 3] >= data[:, 5])


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 5


def test_db_and_linear_conflict(capsys):
    code, _, err = run(capsys, "pdf", "--K", "3", "--K-db", "5")
    assert code == 2 and "error" in err


def test_invalid_value_exit_code(capsys):
    code, _, _ = run(capsys, "cdf", "--k", "-1")
    assert code == 2


def test_preset_must_match_command(capsys):
    code, _, _ = run(capsys, "pdf", "--preset", "fig4")
    assert code == 2


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"K_db": 10, "k": 3, "x_max": 4.0, "points": 5}))
    _, from_file, _ = run(capsys, "cdf", "--config", str(cfg))
    _, direct, _ = run(capsys, "cdf", "--K-db", "10", "--k", "3", "--x-max", "4", "--points", "5")
    assert from_file == direct
    _, overridden, _ = run(capsys, "cdf", "--config", str(cfg), "--k", "2")
    _, expected, _ = run(capsys, "cdf", "--K-db", "10", "--k", "2", "--x-max", "4", "--points", "5")
    assert overridden == expected
    # a linear flag replaces a dB value from the file
    _, lin, _ = run(capsys, "cdf", "--config", str(cfg), "--K", "10")
    _, lin_ref, _ = run(capsys, "cdf", "--K", "10", "--k", "3", "--x-max", "4", "--points", "5")
    assert lin == lin_ref


def test_sweep_columns(capsys):
    _, out, _ = run(capsys, "cdf", "--k", "1,2", "--lambda", "0,1", "--points", "4")
    header, _ = rows(out)
    assert header == ["x", "cdf_k=1_lambda=0", "cdf_k=1_lambda=1", "cdf_k=2_lambda=0", "cdf_k=2_lambda=1"]


def test_output_file(tmp_path, capsys):
    path = tmp_path / "m.csv"
    assert main(["moments", "--K", "0", "--n-max", "3", "-o", str(path)]) == 0
    header, data = rows(path.read_text())
    np.testing.assert_allclose(data[:, 1], [1.0, 2.0, 6.0], rtol=1e-13)


@pytest.mark.parametrize("argv", [
    ["sample", "--k", "2", "--K", "5", "--lambda", "2", "--draws", "150000", "--seed", "4", "--points", "20"],
    ["op", "--preset", "fig4", "--lambda", "0,2,5", "--points", "11"],
])
def test_csv_identical_across_thread_counts(argv, capsys, monkeypatch):
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("FLOS_THREADS", threads)
        code, out, _ = run(capsys, *argv)
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


def test_sample_reports_ks(capsys):
    code, out, err = run(capsys, "sample", "--k", "2", "--K", "3", "--draws", "50000", "--seed", "9", "--points", "10")
    assert code == 0 and "pass" in err
    header, data = rows(out)
    assert header == ["x", "ecdf", "cdf"]
    assert np.max(np.abs(data[:, 1] - data[:, 2])) < 0.02


def test_aging_preset(capsys):
    code, out, _ = run(capsys, "aging", "--preset", "fig6", "--n-max", "40")
    assert code == 0
    header, data = rows(out)
    assert header == ["n", "pcov_fd_ts=0.005", "pcov_fd_ts=0.01", "pcov_fd_ts=0.02"]
    assert data[0, 1] == data[0, 2] == data[0, 3]
    assert data[38, 2] == pytest.approx(math.exp(-0.1), abs=1e-3)


def test_fit_log1p_json(tmp_path, capsys):
    path = tmp_path / "fit.json"
    assert main(["fit-log1p", "--segments", "0,1,2,4", "--M", "4", "--L", "64", "-o", str(path)]) == 0
    fit = ExpSumFit.from_json(path.read_text())
    assert fit.lower == 0 and fit.upper == 4
    assert abs(fit.eval(3.0) - math.log1p(3.0)) <= fit.sup_error


def test_contour_overrides(capsys):
    base = ["cdf", "--k", "1.5", "--K", "4", "--x-max", "3", "--points", "6"]
    _, default, _ = run(capsys, *base)
    code, finer, _ = run(capsys, *base, "--contour-nodes", "80000", "--contour-epsilon", "0.3")
    assert code == 0
    np.testing.assert_allclose(rows(finer)[1], rows(default)[1], atol=1e-12)
    code, _, _ = run(capsys, *base, "--contour-epsilon", "-1")
    assert code == 2
