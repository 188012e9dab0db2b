import numpy as np
import pytest

from kirchwave.core.decomposition import (
    DegenerateFitError,
    TriState,
    check_w2_bound,
    fit_exponential_decay,
    run_decomposition,
    step_decomposed,
)
from kirchwave.core.dynamics import StepperConfig, initial_state
from kirchwave.core.memory import SpaceLevel, check_history_dissipation


def test_additivity_exact_small_run(spec_small):
    res = run_decomposition(spec_small, StepperConfig(dt=2e-3), 2.0)
    full_norms = np.array([np.sqrt(max(r.H1_full, 0.0)) for r in res.rows])
    defects = np.array([r.additivity_defect for r in res.rows])
    assert np.all(defects <= 1e-10 * (1.0 + full_norms))


def test_zero_data_zero_parts(spec_small_unforced):
    ic = initial_state(spec_small_unforced, u0_amp=0.0)
    res = run_decomposition(spec_small_unforced, StepperConfig(dt=5e-3), 0.5, ic=ic)
    assert max(r.H1_w1 for r in res.rows) == 0.0
    assert max(r.H1_w2 for r in res.rows) == 0.0


def test_single_decomposed_step_matches_runner(spec_small):
    ic = initial_state(spec_small)
    tri = TriState.from_initial(spec_small, ic)
    cfg = StepperConfig(dt=1e-3)
    out = step_decomposed(tri, spec_small, cfg)
    assert out.full.t == pytest.approx(1e-3)
    assert out.additivity_defect(spec_small) <= 1e-12


def test_w1_weighted_energy_monotone(spec_small):
    # The plain regular norm of w1 can rise transiently while the stiffness
    # coefficient relaxes; the coefficient-weighted energy is the quantity
    # the scheme dissipates without exception.
    from kirchwave.core.decomposition import CoStepper
    from kirchwave.core.dynamics import Stepper
    from kirchwave.core.memory import weighted_norm_sq

    spec = spec_small
    cfg = StepperConfig(dt=2e-3)
    co = CoStepper(spec, cfg)
    stepper = Stepper(spec, cfg)
    lam = spec.grid.eigenvalues
    tri = TriState.from_initial(spec, initial_state(spec))

    def weighted_energy(t3):
        w1 = t3.part1
        b = stepper.kirchhoff_coefficient(t3.full.u.coeffs)
        return (
            b * float(np.dot(lam * lam, w1.u.coeffs**2))
            + float(spec.eps.value(w1.t)) * float(np.dot(lam, w1.v.coeffs**2))
            + weighted_norm_sq(w1.eta, spec.history, spec.grid, SpaceLevel.M3)
        )

    vals = [weighted_energy(tri)]
    for _ in range(1500):
        tri = co.step(tri)
        vals.append(weighted_energy(tri))
    vals = np.array(vals)
    assert np.all(np.diff(vals[1:]) <= 1e-12 * (1.0 + vals[1:-1]))
    # the plain norm still decays in the large, with only small wiggle
    res = run_decomposition(spec, cfg, 3.0)
    w1 = res.h1_w1
    assert w1[-1] < 1e-1 * w1[0]
    assert np.all(np.diff(w1) <= 5e-4 * (1.0 + w1[:-1]))


def test_history_part_dissipation_level3(spec_small):
    res = run_decomposition(spec_small, StepperConfig(dt=2e-3), 1.0)
    eta_a = res.final.part1.eta
    d = check_history_dissipation(
        eta_a, spec_small.history, spec_small.grid, spec_small.kernel, SpaceLevel.M3
    )
    assert d.residual >= -1e-4 * (1.0 + d.rhs)


def test_fit_synthetic_decay():
    t = np.linspace(0.0, 40.0, 400)
    y = 5.0 * np.exp(-0.3 * t) + 0.01
    fit = fit_exponential_decay(t, y)
    assert fit.rate == pytest.approx(0.3, abs=1e-3)
    assert fit.floor == pytest.approx(0.01, abs=1e-4)
    assert fit.r_squared > 0.999


def test_fit_constant_series():
    t = np.linspace(0.0, 10.0, 50)
    y = np.full(50, 3.25)
    fit = fit_exponential_decay(t, y)
    assert fit.rate == 0.0
    assert fit.floor == pytest.approx(3.25)
    assert fit.r_squared == 1.0


def test_fit_degenerate_series():
    # an increasing series sits below its fitted floor from the start
    t = np.linspace(0.0, 10.0, 60)
    with pytest.raises(DegenerateFitError):
        fit_exponential_decay(t, t.copy())
    # immediate collapse to the floor leaves no transient to fit
    y = np.concatenate([[1.0], np.zeros(59)])
    with pytest.raises(DegenerateFitError):
        fit_exponential_decay(t, y)


def test_fit_needs_enough_samples():
    with pytest.raises(ValueError):
        fit_exponential_decay(np.arange(5.0), np.arange(5.0))


def test_w2_bound_zero_series():
    t = np.linspace(0.0, 1.0, 11)
    rep = check_w2_bound(t, np.zeros(11))
    assert rep.sup_full == 0.0
    assert rep.bounded_evidence


def test_w2_bound_flags_divergence():
    t = np.linspace(0.0, 10.0, 101)
    rep = check_w2_bound(t, np.exp(0.1 * t))
    assert not rep.bounded_evidence
    assert rep.t_at_sup == pytest.approx(10.0)


def test_w2_bound_interior_peak():
    t = np.linspace(0.0, 10.0, 101)
    y = np.exp(-((t - 3.0) ** 2))
    rep = check_w2_bound(t, y)
    assert rep.bounded_evidence
    assert rep.t_at_sup == pytest.approx(3.0, abs=0.1)


def test_forcing_split_carries_full_data(spec_small):
    # with a forced problem, w2 alone receives the forcing: from rest it
    # must move while w1 stays unforced (decaying from the initial data)
    res = run_decomposition(spec_small, StepperConfig(dt=2e-3), 1.0)
    assert res.h1_w2[0] == 0.0
    assert res.h1_w2[-1] > 0.0
    assert res.h1_w1[-1] < res.h1_w1[0]
