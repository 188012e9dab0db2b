"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one pass/fail line (visible with ``pytest -s``); goldens
live in tests/goldens/goldens.json with per-entry tolerances.
"""

import csv
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from kirchwave.cli import cli_main
from kirchwave.core.decomposition import check_w2_bound, fit_exponential_decay, run_decomposition
from kirchwave.core.dynamics import StepperConfig, initial_state, simulate
from kirchwave.core.experiments import (
    EnsembleSpec,
    run_absorbing_probe,
    run_convergence_study,
    run_pair_study,
)
from kirchwave.core.memory import (
    HistoryField,
    build_history_grid,
    check_history_dissipation,
    make_exponential_kernel,
)
from kirchwave.core.model import default_problem, nonlin_spec
from kirchwave.core.spectral import SpectralField

GOLDENS = json.loads((Path(__file__).parent / "goldens" / "goldens.json").read_text())


def _golden(name: str) -> tuple[float, float]:
    entry = GOLDENS[name]
    return entry["value"], entry["rel_tol"]


def _report(num: int, name: str, ok: bool) -> None:
    print(f"[acceptance] criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture(scope="module")
def spec():
    return default_problem()


@pytest.fixture(scope="module")
def unforced_run_t20(spec):
    variant = spec.with_(nonlin=nonlin_spec(g_kind="zero"), h=SpectralField.zero(spec.grid))
    start = time.monotonic()
    res = simulate(variant, StepperConfig(dt=1e-3), 20.0)
    return res, time.monotonic() - start


@pytest.fixture(scope="module")
def decomposition_t20(spec):
    start = time.monotonic()
    res = run_decomposition(spec, StepperConfig(dt=1e-3), 20.0)
    return res, time.monotonic() - start


@pytest.fixture(scope="module")
def config_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance")
    assert cli_main(["init", "--out", str(d / "default.json")]) == 0
    return d


def test_criterion_01_hypothesis_gate(config_dir):
    base = json.loads((config_dir / "default.json").read_text())

    fixtures = {
        "eps_increasing": (dict(base, epsilon={"kind": "sine", "a": 0.01, "eps0": 1.0}), "(1.2)"),
        "delta_range": (dict(base, delta=1.5), "§1"),
        "kernel_decay": (
            dict(base, kernel=dict(base["kernel"], kind="slow_decay")),
            "(1.16)",
        ),
        "kernel_order": (
            dict(base, kernel=dict(base["kernel"], delta1=2.0, delta2=1.0)),
            "(1.16)",
        ),
        "f_offset": (dict(base, f={"kind": "offset", "slope": 1.0, "offset": 0.3}), "(1.4)"),
        "g_kappa": (dict(base, g={"kind": "sine", "kappa": 1.5}), "(3.8)"),
    }

    ok = True
    start = time.monotonic()
    code = cli_main(["check", str(config_dir / "default.json")])
    elapsed_default = time.monotonic() - start
    ok &= code == 0 and elapsed_default < 1.0

    import io
    from contextlib import redirect_stdout

    for name, (doc, tag) in fixtures.items():
        path = config_dir / f"bad_{name}.json"
        path.write_text(json.dumps(doc))
        buf = io.StringIO()
        start = time.monotonic()
        with redirect_stdout(buf):
            code = cli_main(["check", str(path)])
        elapsed = time.monotonic() - start
        named = tag in buf.getvalue()
        ok &= code == 3 and named and elapsed < 1.0
        assert code == 3, f"{name}: expected exit 3, got {code}"
        assert named, f"{name}: output does not name {tag}: {buf.getvalue()}"
        assert elapsed < 1.0, f"{name}: check took {elapsed:.2f}s"

    _report(1, "hypothesis gate", ok)
    assert ok


def test_criterion_02_oracle_convergence():
    spec8 = default_problem(n_modes=8)
    start = time.monotonic()
    table = run_convergence_study(spec8, [4e-3, 2e-3, 1e-3], 1.0, 1e-5)
    elapsed = time.monotonic() - start
    ratios = table.ratios
    ok = len(ratios) == 2 and all(1.7 <= r <= 2.3 for r in ratios) and elapsed < 30.0
    _report(2, "oracle convergence", ok)
    assert all(1.7 <= r <= 2.3 for r in ratios), f"ratios {ratios}"
    assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_criterion_03_energy_monotonicity(unforced_run_t20):
    res, elapsed = unforced_run_t20
    i1 = np.array([r.I1 for r in res.reports])
    increments = np.diff(i1)
    bound = 1e-8 * (1.0 + np.abs(i1[:-1]))
    norm_g, norm_tol = _golden("unforced_normH_sq_T20")
    norm_ok = abs(res.reports[-1].normH - norm_g) <= norm_tol * abs(norm_g)
    ok = bool(np.all(increments <= bound)) and i1[-1] < i1[0] and norm_ok and elapsed < 60.0
    _report(3, "energy monotonicity", ok)
    assert np.all(increments <= bound), f"max increment {increments.max():.3e}"
    assert i1[-1] < i1[0]
    assert norm_ok
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_04_history_dissipation():
    start = time.monotonic()
    grid = default_problem(n_modes=8, history_cells=16).grid
    kernel = make_exponential_kernel(1.0, 1.0)
    hist = build_history_grid(kernel, 256, 1e-8)

    equal = HistoryField.from_profile(1.0 - np.exp(-hist.s_nodes), SpectralField.mode(grid, 1), hist)
    d = check_history_dissipation(equal, hist, grid, kernel)
    ok = abs(d.lhs - 1.0 / 6.0) <= 1e-5 and abs(d.rhs - 1.0 / 6.0) <= 1e-5

    rng = np.random.default_rng(314)
    worst = np.inf
    for _ in range(100):
        c = rng.uniform(-1.0, 1.0, size=3)
        mode = int(rng.integers(1, grid.n_modes + 1))
        p = c[0] * hist.s_nodes + c[1] * hist.s_nodes**2 + c[2] * hist.s_nodes**3
        eta = HistoryField.from_profile(p, SpectralField.mode(grid, mode), hist)
        dd = check_history_dissipation(eta, hist, grid, kernel)
        margin = dd.residual + 1e-4 * (1.0 + dd.rhs)
        worst = min(worst, margin)
    elapsed = time.monotonic() - start
    ok = ok and worst >= 0.0 and elapsed < 5.0
    _report(4, "history dissipation", ok)
    assert abs(d.lhs - 1.0 / 6.0) <= 1e-5, f"lhs {d.lhs}"
    assert abs(d.rhs - 1.0 / 6.0) <= 1e-5, f"rhs {d.rhs}"
    assert worst >= 0.0
    assert elapsed < 5.0, f"took {elapsed:.1f}s"


def test_criterion_05_decomposition_additivity(decomposition_t20):
    res, elapsed = decomposition_t20
    defects = np.array([r.additivity_defect for r in res.rows])
    # stricter than the stated bound 1e-10*(1 + ||full||): drop the norm term
    ok = bool(np.all(defects <= 1e-10)) and elapsed < 120.0
    _report(5, "decomposition additivity", ok)
    assert np.all(defects <= 1e-10), f"max defect {defects.max():.3e}"
    assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_06_w1_decay(decomposition_t20):
    res, _ = decomposition_t20
    fit = fit_exponential_decay(res.t, res.h1_w1, 0.1)
    rate_g, rate_tol = _golden("w1_decay_rate")
    floor_g, floor_tol = _golden("w1_decay_floor")
    r2_g, r2_tol = _golden("w1_decay_r2")
    ok = (
        fit.rate > 0.0
        and fit.r_squared >= 0.95
        and fit.floor < 1e-3 * res.h1_w1[0]
        and abs(fit.rate - rate_g) <= rate_tol * abs(rate_g)
        and abs(fit.floor - floor_g) <= floor_tol * abs(floor_g)
        and abs(fit.r_squared - r2_g) <= r2_tol * abs(r2_g)
    )
    _report(6, "w1 regular-norm decay", ok)
    assert fit.rate > 0.0
    assert fit.r_squared >= 0.95, f"r2 {fit.r_squared}"
    assert fit.floor < 1e-3 * res.h1_w1[0]
    assert abs(fit.rate - rate_g) <= rate_tol * abs(rate_g)
    assert abs(fit.floor - floor_g) <= floor_tol * abs(floor_g)
    assert abs(fit.r_squared - r2_g) <= r2_tol * abs(r2_g)


def test_criterion_07_w2_boundedness(spec):
    res_a = run_decomposition(spec, StepperConfig(dt=1e-3), 40.0)
    sup_a = check_w2_bound(res_a.t, res_a.h1_w2).sup_full
    res_b = run_decomposition(spec, StepperConfig(dt=5e-4), 40.0)
    sup_b = check_w2_bound(res_b.t, res_b.h1_w2).sup_full
    golden, tol = _golden("w2_sup_T40")
    ok = (
        np.isfinite(sup_a)
        and abs(sup_a - golden) <= tol * abs(golden)
        and abs(sup_b - sup_a) <= 0.05 * abs(sup_a)
    )
    _report(7, "w2 boundedness", ok)
    assert np.isfinite(sup_a)
    assert abs(sup_a - golden) <= tol * abs(golden), f"sup {sup_a} vs golden {golden}"
    assert abs(sup_b - sup_a) <= 0.05 * abs(sup_a), f"dt halving moved sup {sup_a} -> {sup_b}"


def test_criterion_08_absorbing_probe(spec):
    r_star, r_tol = _golden("absorb_R_star")
    entry_g, entry_tol = _golden("absorb_max_entry_time")
    ens = EnsembleSpec(
        n_traj=10,
        radius_set=(1.0, 10.0),
        seed=2024,
        t_final=25.0,
        threshold_r=r_star,
        dt=2e-3,
    )
    report = run_absorbing_probe(spec, ens)
    ok = (
        report.all_absorbed
        and report.max_entry_time is not None
        and abs(report.max_entry_time - entry_g) <= entry_tol * abs(entry_g)
    )
    _report(8, "absorbing-ball probe", ok)
    assert report.all_absorbed, report.to_dict()
    assert abs(report.max_entry_time - entry_g) <= entry_tol * abs(entry_g)


def test_criterion_09_pair_functionals(spec):
    ic1 = initial_state(spec, u0_amp=1.0)
    ic2 = initial_state(spec, u0_amp=1.1)
    study = run_pair_study(spec, ic1, ic2, 10.0, dt=1e-3)
    rep = study.report
    rel = np.abs(rep.E - 2.0 * rep.Atilde1) / np.maximum(np.abs(rep.E), 1e-300)
    identity_ok = bool(np.all(rel <= 1e-12))

    same = run_pair_study(spec, ic1, ic1, 1.0, dt=1e-3)
    trivial_ok = bool(np.all(same.report.Atilde1 == 0.0))

    bound_ok = rep.lhs <= rep.rhs + 1e-3 * (1.0 + abs(rep.rhs))
    golden_at1, at1_tol = _golden("pair_Atilde1_T10")
    golden_rhs, rhs_tol = _golden("pair_bound_rhs")
    regression_ok = (
        abs(rep.Atilde1[-1] - golden_at1) <= at1_tol * abs(golden_at1)
        and abs(rep.rhs - golden_rhs) <= rhs_tol * abs(golden_rhs)
    )
    ok = identity_ok and trivial_ok and bound_ok and regression_ok and study.contracted
    _report(9, "pair functional identities", ok)
    assert identity_ok
    assert trivial_ok
    assert bound_ok, f"lhs {rep.lhs} rhs {rep.rhs}"
    assert regression_ok
    assert study.contracted


def test_criterion_10_determinism(config_dir, tmp_path):
    cmd = [
        sys.executable,
        "-m",
        "kirchwave.cli",
        "simulate",
        str(config_dir / "default.json"),
        "--T",
        "5",
        "--dt",
        "1e-3",
    ]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        proc = subprocess.run(cmd + ["--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr

    def load(path: Path):
        with (path / "energy.csv").open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            return header, [[float(x) for x in row] for row in reader]

    h1, rows1 = load(out1)
    h2, rows2 = load(out2)
    byte_equal = (out1 / "energy.csv").read_bytes() == (out2 / "energy.csv").read_bytes()
    ok = h1 == h2 and rows1 == rows2 and byte_equal
    _report(10, "determinism at the artifact boundary", ok)
    assert h1 == h2
    assert rows1 == rows2
    assert byte_equal
