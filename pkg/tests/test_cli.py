import json
from pathlib import Path

import pytest

from kirchwave.cli import cli_main
from kirchwave.manifest import config_digest


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert cli_main(["init", "--out", str(d / "default.json")]) == 0
    return d


@pytest.fixture(scope="module")
def small_config(workdir):
    doc = json.loads((workdir / "default.json").read_text())
    doc["domain"] = {"length": doc["domain"]["length"], "n_modes": 6, "n_phys": 12}
    doc["kernel"]["M"] = 16
    path = workdir / "small.json"
    path.write_text(json.dumps(doc))
    return path


def test_check_default_ok(workdir):
    assert cli_main(["check", str(workdir / "default.json")]) == 0


def test_check_missing_file(workdir):
    assert cli_main(["check", str(workdir / "nope.json")]) == 2


def test_check_invalid_json(workdir):
    bad = workdir / "broken.json"
    bad.write_text("{not json")
    assert cli_main(["check", str(bad)]) == 2


def test_check_unknown_key_exit_2(workdir):
    doc = json.loads((workdir / "default.json").read_text())
    doc["mystery"] = True
    p = workdir / "unknown.json"
    p.write_text(json.dumps(doc))
    assert cli_main(["check", str(p)]) == 2


def test_simulate_writes_csv_and_manifest(small_config, workdir):
    out = workdir / "run_sim"
    code = cli_main(["simulate", str(small_config), "--T", "0.05", "--dt", "0.01", "--out", str(out)])
    assert code == 0
    with (out / "energy.csv").open() as fh:
        header = fh.readline().strip()
    assert header == "t,normH,normH1,I1,A1,B1,diss_residual,hist_lhs,hist_rhs"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert "energy.csv" in manifest["outputs"]


def test_digest_stable_under_key_order():
    a = {"x": 1, "nested": {"b": 2, "a": 3}}
    b = {"nested": {"a": 3, "b": 2}, "x": 1}
    assert config_digest(a) == config_digest(b)


def test_simulate_determinism_in_process(small_config, workdir):
    out1 = workdir / "det1"
    out2 = workdir / "det2"
    for out in (out1, out2):
        assert cli_main(["simulate", str(small_config), "--T", "0.2", "--dt", "0.01", "--out", str(out)]) == 0
    assert (out1 / "energy.csv").read_bytes() == (out2 / "energy.csv").read_bytes()


def test_decompose_cli(small_config, workdir):
    out = workdir / "run_dec"
    code = cli_main(["decompose", str(small_config), "--T", "0.5", "--dt", "0.005", "--out", str(out)])
    assert code == 0
    with (out / "decomposition.csv").open() as fh:
        assert fh.readline().strip() == "t,H1_full,H1_w1,H1_w2,additivity_defect"
    report = json.loads((out / "decomposition_report.json").read_text())
    assert report["max_additivity_defect"] < 1e-10


def test_pair_cli(small_config, workdir):
    out = workdir / "run_pair"
    code = cli_main(["pair", str(small_config), "--T", "0.2", "--dt", "0.005", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "pair_report.json").read_text())
    assert set(report) == {"T", "C_Atilde1", "Phi_T", "lhs", "rhs", "bound_rhs", "holds"}


def test_absorb_cli(small_config, workdir):
    out = workdir / "run_abs"
    code = cli_main(
        [
            "absorb",
            str(small_config),
            "--n-traj",
            "1",
            "--radii",
            "1",
            "--seed",
            "5",
            "--T",
            "2.0",
            "--dt",
            "0.01",
            "--threshold",
            "1.0",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    probe = json.loads((out / "probe.json").read_text())
    assert probe["threshold_R"] == 1.0
    assert {"id", "radius", "entry_time", "stayed"}.issubset(probe["entries"][0])


def test_converge_cli(small_config, workdir):
    out = workdir / "run_conv"
    code = cli_main(
        [
            "converge",
            str(small_config),
            "--dts",
            "2e-2",
            "--T",
            "0.1",
            "--dt-ref",
            "5e-4",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    with (out / "convergence.csv").open() as fh:
        assert fh.readline().strip() == "dt,error,ratio"


def test_plot_two_point_series(workdir):
    csv_path = workdir / "tiny.csv"
    csv_path.write_text("t,val\n0.0,1.0\n1.0,2.0\n")
    out = workdir / "tiny.svg"
    assert cli_main(["plot", str(csv_path), "--col", "val", "--out", str(out)]) == 0
    text = out.read_text()
    assert "<polyline" in text
    assert text.count("<svg") == 1


def test_plot_log_scale(workdir):
    csv_path = workdir / "decay.csv"
    rows = "\n".join(f"{t},{5 * 2.718 ** (-0.3 * t) + 1e-4}" for t in range(40))
    csv_path.write_text("t,val\n" + rows + "\n")
    out = workdir / "decay.svg"
    assert cli_main(["plot", str(csv_path), "--col", "val", "--log", "--out", str(out)]) == 0
    assert "log10" in out.read_text()


def test_plot_empty_and_missing_column(workdir):
    empty = workdir / "empty.csv"
    empty.write_text("t,val\n")
    assert cli_main(["plot", str(empty), "--col", "val", "--out", str(workdir / "x.svg")]) == 2
    data = workdir / "ok.csv"
    data.write_text("t,val\n0,1\n")
    assert cli_main(["plot", str(data), "--col", "other", "--out", str(workdir / "y.svg")]) == 2


def test_plot_deterministic_bytes(workdir):
    csv_path = workdir / "same.csv"
    csv_path.write_text("t,val\n0.0,1.0\n0.5,0.25\n1.0,2.0\n")
    a = workdir / "a.svg"
    b = workdir / "b.svg"
    assert cli_main(["plot", str(csv_path), "--col", "val", "--out", str(a)]) == 0
    assert cli_main(["plot", str(csv_path), "--col", "val", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_numerical_abort_exit_code(small_config, workdir):
    out = workdir / "run_abort"
    code = cli_main(
        [
            "simulate",
            str(small_config),
            "--T",
            "0.1",
            "--dt",
            "0.01",
            "--u0-amp",
            "1e200",
            "--out",
            str(out),
        ]
    )
    assert code == 4
