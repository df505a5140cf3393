import io
import os

import numpy as np
import pytest

from polcorr import fit_modulation, ingest_counts_csv
from polcorr.analysis import ModulationCurve
from polcorr.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, run

SIX_POINT = "theta2_deg,counts\n0,100\n30,75\n60,25\n90,0\n120,26\n150,74\n"


def call(*argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdin=io.StringIO(stdin), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _curve_from_csv(text):
    rows = np.array([[float(x) for x in line.split(",")] for line in text.splitlines()[1:]])
    return ModulationCurve(float("nan"), rows[:, 0], rows[:, 1])


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


def test_scan_theta_45_is_flat():
    code, out, _ = call("scan-theta", "--theta1", "45", "--config", "default")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "theta2_deg,rate"
    assert len(out.splitlines()) == 42
    assert fit_modulation(_curve_from_csv(out)).V <= 0.01


def test_validate_reports_key(write):
    code, out, err = call("validate", "--config", write("bad.cfg", "DL_fs = -5\n"))
    assert code == EXIT_CONFIG
    assert "DL_fs" in err and out == ""


def test_validate_ok():
    assert call("validate") == (EXIT_OK, "ok\n", "")


def test_fit_six_point(write):
    code, out, _ = call("fit", "--input", write("six_point.csv", SIX_POINT))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "V,sigma_V,a0,a1,a2,residual_rms" and len(lines) == 2
    expected = fit_modulation(ingest_counts_csv(SIX_POINT))
    assert float(lines[1].split(",")[0]) == pytest.approx(expected.V, rel=1e-11)


def test_fit_from_stdin():
    code, out, _ = call("fit", "--input", "-", stdin=SIX_POINT)
    assert code == EXIT_OK and out.startswith("V,")


@pytest.mark.parametrize("text", ["", "theta2_deg,counts\n0,1\n10,2\n", "theta2_deg,counts\n0,a\n"])
def test_fit_bad_data_exit_4(write, text):
    code, out, err = call("fit", "--input", write("d.csv", text))
    assert code == EXIT_DATA and out == "" and "data error" in err


def test_fit_missing_file_exit_4(tmp_path):
    assert call("fit", "--input", str(tmp_path / "nope.csv"))[0] == EXIT_DATA


def test_unknown_flag_exit_2():
    assert call("scan-theta", "--theta1", "0", "--bogus")[0] == EXIT_CONFIG


def test_missing_subcommand_exit_2():
    assert call()[0] == EXIT_CONFIG


def test_unreadable_config_exit_2(tmp_path):
    assert call("validate", "--config", str(tmp_path / "missing.cfg"))[0] == EXIT_CONFIG


def test_uncovered_delay_is_config_error(write):
    code, out, err = call("scan-theta", "--theta1", "0", "--config", write("far.cfg", "tau_fs = 3000\n"))
    assert code == EXIT_CONFIG and out == ""
    assert "does not cover" in err


def test_scan_tau_beyond_grid_exit_3():
    code, _, err = call("scan-tau", "--theta1", "0", "--tau", "0,1500")
    assert code == EXIT_NUMERICAL and "tau" in err


def test_visibility_map_and_alias():
    a = call("visibility-map", "--theta1", "0,45,90")
    b = call("compare-models", "--theta1", "0,45,90")
    assert a == b and a[0] == EXIT_OK
    rows = [list(map(float, line.split(","))) for line in a[1].splitlines()[1:]]
    assert rows[1][1] <= 0.01 and rows[1][2] >= 0.99


def test_scan_tau_range():
    code, out, _ = call("scan-tau", "--theta1", "90", "--tau-range", "0", "20", "10")
    assert code == EXIT_OK
    assert [line.split(",")[0] for line in out.splitlines()[1:]] == ["0", "10", "20"]


def test_density_matrix_output():
    code, out, _ = call("density-matrix")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "XX,XY,YX,YY" and len(lines) == 5
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == pytest.approx(0.25) and first[6] == pytest.approx(-0.25)


def test_counts_deterministic_per_seed(tmp_path):
    args = ("scan-theta", "--theta1", "30", "--counts", "1000")
    a = call(*args, "--seed", "9")[1]
    b = call(*args, "--seed", "9")[1]
    c = call(*args, "--seed", "10")[1]
    assert a == b and a != c
    assert a.splitlines()[0] == "theta2_deg,counts,sigma"


def test_output_file_byte_identical(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (p1, p2):
        assert call("--seed", "4", "scan-theta", "--theta1", "20", "--counts", "500", "--output", str(p))[0] == 0
    assert p1.read_bytes() == p2.read_bytes()
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]


def test_no_partial_output_on_error(tmp_path):
    target = tmp_path / "out.csv"
    code = call("scan-tau", "--theta1", "0", "--tau", "1500", "--output", str(target))[0]
    assert code == EXIT_NUMERICAL and not target.exists()


def test_figure1_bundle(tmp_path):
    assert call("figure1", "--outdir", str(tmp_path))[0] == EXIT_OK
    panels = {n: (tmp_path / f"fig1{n}.csv").read_text() for n in "abcd"}
    a, c = _curve_from_csv(panels["a"]), _curve_from_csv(panels["c"])
    scale = a.values.max()
    assert np.max(np.abs(a.values - c.values)) <= 1e-10 * scale
    assert fit_modulation(a).V >= 0.99
    assert fit_modulation(_curve_from_csv(panels["b"])).V <= 0.01


def test_figure1_filtered_regime(tmp_path, write):
    cfg = write("filtered.cfg", "filter_enabled = true\nfilter_sigma_fs = 75\n")
    outdir = tmp_path / "out"
    outdir.mkdir()
    assert call("figure1", "--outdir", str(outdir), "--config", cfg)[0] == EXIT_OK
    v = fit_modulation(_curve_from_csv((outdir / "fig1b.csv").read_text())).V
    assert 0.10 <= v <= 0.25


def test_figure1_missing_dir_exit_2(tmp_path):
    assert call("figure1", "--outdir", str(tmp_path / "absent"))[0] == EXIT_CONFIG


def test_amplitude_dump():
    code, out, _ = call("amplitude", "--stride", "100")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "t_e_fs,t_o_fs,abs_A_squared"
    assert len(lines) == 1 + 13 * 13
