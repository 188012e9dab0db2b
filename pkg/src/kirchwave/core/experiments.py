"""Orchestrated studies: absorbing-ball probe, pair contraction, convergence.

These drive the integrator over ensembles or trajectory pairs and reduce
the runs to the quantities the long-time theory talks about: the time at
which every trajectory enters a candidate absorbing ball and whether it
stays, the contraction of the distance functional between two runs, and
the order of accuracy of the production stepper against the explicit
reference.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    Scheme,
    StepperConfig,
    SystemState,
    initial_state,
    iter_states,
    simulate,
    stability_bound,
)
from .energy import PairConstants, PairReport, eval_pair
from .memory import HistoryField
from .model import ProblemSpec
from .spectral import SpectralField

__all__ = [
    "EnsembleSpec",
    "ProbeEntry",
    "ProbeReport",
    "sample_initial_state",
    "run_absorbing_probe",
    "PairStudyResult",
    "run_pair_study",
    "ConvergenceRow",
    "ConvergenceTable",
    "run_convergence_study",
]

HYSTERESIS = 0.02  # tolerated relative excursion above the threshold after entry


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("KAL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class EnsembleSpec:
    n_traj: int
    radius_set: tuple[float, ...]
    seed: int
    t_final: float
    threshold_r: float
    dt: float = 2e-3

    def __post_init__(self) -> None:
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not all(r > 0 for r in self.radius_set):
            raise ValueError("radii must be positive")


def sample_initial_state(spec: ProblemSpec, seed_key: tuple[int, ...], radius: float) -> SystemState:
    """Random initial data rescaled to a prescribed phase-space norm.

    Mode coefficients for u and v are drawn with variance decaying as
    k^-2; the history starts empty so the rescaling of the norm is exact.
    """
    rng = np.random.default_rng(seed_key)
    k = np.arange(1, spec.grid.n_modes + 1, dtype=float)
    u = rng.standard_normal(spec.grid.n_modes) / k
    v = rng.standard_normal(spec.grid.n_modes) / k
    state = SystemState(
        t=0.0,
        u=SpectralField(u),
        v=SpectralField(v),
        eta=HistoryField.zero(spec.history, spec.grid),
    )
    scale = radius / np.sqrt(state.norm_h_sq(spec))
    return SystemState(
        t=0.0,
        u=SpectralField(u * scale),
        v=SpectralField(v * scale),
        eta=state.eta,
    )


@dataclass(frozen=True)
class ProbeEntry:
    traj_id: int
    radius: float
    entry_time: float | None
    stayed: bool
    long_time_sup: float


@dataclass(frozen=True)
class ProbeReport:
    threshold_r: float
    entries: tuple[ProbeEntry, ...]
    max_entry_time: float | None

    @property
    def all_absorbed(self) -> bool:
        return all(e.entry_time is not None and e.stayed for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "threshold_R": self.threshold_r,
            "entries": [
                {
                    "id": e.traj_id,
                    "radius": e.radius,
                    "entry_time": e.entry_time,
                    "stayed": e.stayed,
                    "long_time_sup": e.long_time_sup,
                }
                for e in self.entries
            ],
            "max_entry_time": self.max_entry_time,
        }


def _probe_one(spec: ProblemSpec, ens: EnsembleSpec, traj_id: int, radius: float) -> ProbeEntry:
    ic = sample_initial_state(spec, (ens.seed, traj_id), radius)
    cfg = StepperConfig(dt=ens.dt)
    threshold = ens.threshold_r
    band = threshold * (1.0 + HYSTERESIS)

    entry_time: float | None = None
    stayed = True
    burn_in = 0.5 * ens.t_final
    long_sup = 0.0

    def observer(i: int, state: SystemState) -> None:
        nonlocal entry_time, stayed, long_sup
        val = state.norm_h_sq(spec)
        if entry_time is None and val <= threshold:
            entry_time = state.t
        elif entry_time is not None and val > band:
            stayed = False
        if state.t >= burn_in:
            long_sup = max(long_sup, val)

    simulate(spec, cfg, ens.t_final, ic=ic, observers=(observer,), record_energy=False)
    return ProbeEntry(
        traj_id=traj_id, radius=radius, entry_time=entry_time, stayed=stayed, long_time_sup=long_sup
    )


def run_absorbing_probe(spec: ProblemSpec, ens: EnsembleSpec) -> ProbeReport:
    """Drive the seeded ensemble and record entry into the candidate ball.

    Each trajectory is deterministic under (seed, id); re-entry slack of
    2% above the threshold avoids flagging quadrature-level wiggle.
    """
    jobs = [
        (traj_id, radius)
        for radius in ens.radius_set
        for traj_id in range(ens.n_traj)
    ]
    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda jr: _probe_one(spec, ens, jr[0], jr[1]), jobs))
    else:
        entries = [_probe_one(spec, ens, tid, rad) for tid, rad in jobs]

    times = [e.entry_time for e in entries]
    max_entry = None if any(t is None for t in times) else (max(times) if times else None)
    return ProbeReport(threshold_r=ens.threshold_r, entries=tuple(entries), max_entry_time=max_entry)


@dataclass
class PairStudyResult:
    report: PairReport

    @property
    def initial_distance(self) -> float:
        return float(self.report.Atilde1[0])

    @property
    def final_distance(self) -> float:
        return float(self.report.Atilde1[-1])

    @property
    def contracted(self) -> bool:
        return self.final_distance < self.initial_distance


def run_pair_study(
    spec: ProblemSpec,
    ic1: SystemState,
    ic2: SystemState,
    t_final: float,
    dt: float = 1e-3,
    constants: PairConstants = PairConstants(),
) -> PairStudyResult:
    """Advance two trajectories in lockstep and evaluate the pair bound."""
    cfg = StepperConfig(dt=dt)
    s1 = iter_states(spec, cfg, t_final, ic1)
    s2 = iter_states(spec, cfg, t_final, ic2)
    report = eval_pair(s1, s2, dt, spec, constants)
    return PairStudyResult(report=report)


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    error: float
    ratio: float | None
    valid: bool
    note: str = ""


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    dt_ref: float

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]


def _norm_h_diff(a: SystemState, b: SystemState, spec: ProblemSpec) -> float:
    ghost = SystemState(
        t=a.t,
        u=SpectralField(a.u.coeffs - b.u.coeffs),
        v=SpectralField(a.v.coeffs - b.v.coeffs),
        eta=HistoryField(a.eta.snapshots - b.eta.snapshots),
    )
    return float(np.sqrt(ghost.norm_h_sq(spec)))


def run_convergence_study(
    spec: ProblemSpec,
    dts: list[float],
    t_final: float,
    dt_ref: float,
    ic: SystemState | None = None,
) -> ConvergenceTable:
    """Errors of the production stepper against the explicit reference.

    The reference trajectory is computed once at dt_ref, which must be at
    least 20x finer than the finest production step; a production dt equal
    to the reference dt is flagged as an invalid comparison rather than
    scored.
    """
    if any(d <= 0 for d in dts):
        raise ValueError("step sizes must be positive")
    state0 = ic if ic is not None else initial_state(spec)
    usable = [d for d in dts if d > dt_ref]
    if usable and dt_ref > min(usable) / 20.0:
        raise ValueError("reference dt must be at least 20x finer than the smallest dt")

    bound = stability_bound(spec, state0, horizon=t_final)
    if dt_ref > bound:
        raise ValueError(f"reference dt {dt_ref} exceeds the stability bound {bound:.3e}")
    ref_cfg = StepperConfig(dt=dt_ref, scheme=Scheme.REFERENCE_RK4)
    ref = simulate(spec, ref_cfg, t_final, ic=state0, record_energy=False).final_state

    rows: list[ConvergenceRow] = []
    prev_err: float | None = None
    for d in sorted(dts, reverse=True):
        if d <= dt_ref:
            rows.append(
                ConvergenceRow(dt=d, error=0.0, ratio=None, valid=False, note="dt at or below reference; invalid comparison")
            )
            continue
        cfg = StepperConfig(dt=d)
        final = simulate(spec, cfg, t_final, ic=state0, record_energy=False).final_state
        err = _norm_h_diff(final, ref, spec)
        ratio = (prev_err / err) if (prev_err is not None and err > 0) else None
        rows.append(ConvergenceRow(dt=d, error=err, ratio=ratio, valid=True))
        prev_err = err
    return ConvergenceTable(rows=rows, dt_ref=dt_ref)
