"""Energy functionals, dissipation monitoring, and trajectory-pair bounds.

Single-trajectory quantities
    I1      base energy: kinetic + stiffness + Kirchhoff potential +
            history, minus the work of g and h,
    A1, B1  the perturbed functional pair built on the shifted velocity
            v_aux = u_t + alpha*u, whose discrete combination
            d/dt A1 + B1 should stay non-positive,
    normH   squared phase-space norm, normH1 its stronger counterpart
            (Laplacian / gradient-velocity / level-3 history).

The dissipation monitor forms the forward difference of I1 and adds the
dissipation terms evaluated at the end of each step (matching the
implicit integrator); its residual should never be meaningfully positive.

Trajectory-pair quantities track the squared distance between two runs
(Atilde1 and its doubled form E) and evaluate an integral bound of the
form T*Atilde1(T) <= C + Phi with explicitly configured constants; both
sides are reported, making the check a diagnostic of those constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dynamics import SystemState
from .memory import SpaceLevel, check_history_dissipation, weighted_norm_sq
from .model import ProblemSpec
from .spectral import gradient_boundary, gradient_values, to_physical

__all__ = [
    "EnergyReport",
    "PairConstants",
    "PairReport",
    "TrajectoryRecorder",
    "eval_I1",
    "eval_A1_B1",
    "phase_norms_sq",
    "monitor_dissipation",
    "eval_pair",
    "ENERGY_COLUMNS",
]

ENERGY_COLUMNS = ("t", "normH", "normH1", "I1", "A1", "B1", "diss_residual", "hist_lhs", "hist_rhs")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    normH: float
    normH1: float
    I1: float
    A1: float
    B1: float
    diss_residual: float
    hist_lhs: float
    hist_rhs: float

    def row(self) -> tuple[float, ...]:
        return (
            self.t,
            self.normH,
            self.normH1,
            self.I1,
            self.A1,
            self.B1,
            self.diss_residual,
            self.hist_lhs,
            self.hist_rhs,
        )


def _potential_integral(state: SystemState, spec: ProblemSpec) -> float:
    """int_Omega (G(u) + h*u) dx by collocation quadrature / Parseval."""
    g = spec.grid
    hu = float(np.dot(spec.h.coeffs, state.u.coeffs))
    if spec.nonlin.g_kind == "zero":
        return hu
    vals = to_physical(state.u, g)
    return float(g.dx * np.sum(spec.nonlin.G(vals))) + hu


def _f_pairing(state: SystemState, spec: ProblemSpec) -> float:
    """(f(v), v) in L2; exact Parseval form when f is linear."""
    v = state.v.coeffs
    slope = spec.nonlin.f_linear_slope
    if slope is not None:
        return float(slope * np.dot(v, v))
    g = spec.grid
    vals = to_physical(state.v, g)
    return float(g.dx * np.sum(spec.nonlin.f(vals) * vals))


def _g_pairing(state: SystemState, spec: ProblemSpec) -> float:
    """(g(u), u) in L2 by collocation quadrature."""
    if spec.nonlin.g_kind == "zero":
        return 0.0
    g = spec.grid
    vals = to_physical(state.u, g)
    return float(g.dx * np.sum(spec.nonlin.g(vals) * vals))


def eval_I1(state: SystemState, spec: ProblemSpec) -> float:
    """Base energy of a state."""
    g = spec.grid
    lam = g.eigenvalues
    u, v = state.u.coeffs, state.v.coeffs
    eps_t = float(spec.eps.value(state.t))
    grad_sq = float(np.dot(lam, u * u))
    return (
        0.5 * eps_t * float(np.dot(v, v))
        + 0.5 * grad_sq
        + grad_sq ** (0.5 * spec.m + 1.0) / (spec.m + 2.0)
        + 0.5 * weighted_norm_sq(state.eta, spec.history, g)
        - _potential_integral(state, spec)
    )


def eval_A1_B1(state: SystemState, spec: ProblemSpec) -> tuple[float, float]:
    """The perturbed functional pair at one state."""
    g = spec.grid
    lam = g.eigenvalues
    u, v = state.u.coeffs, state.v.coeffs
    alpha = spec.alpha
    eps_t = float(spec.eps.value(state.t))
    deps_t = float(spec.eps.slope(state.t))
    v_aux = v + alpha * u

    u_sq = float(np.dot(u, u))
    grad_u_sq = float(np.dot(lam, u * u))
    grad_v_sq = float(np.dot(lam, v * v))
    v_aux_sq = float(np.dot(v_aux, v_aux))
    eta_sq = weighted_norm_sq(state.eta, spec.history, g)
    grad_pow = grad_u_sq ** (0.5 * spec.m + 1.0)

    a1 = (
        0.5 * eps_t * v_aux_sq
        - 0.5 * alpha * alpha * eps_t * u_sq
        + 0.5 * grad_u_sq
        + grad_pow / (spec.m + 2.0)
        + 0.5 * alpha * grad_u_sq
        + 0.5 * eta_sq
        - _potential_integral(state, spec)
    )

    eta_u = float(np.dot(spec.history.weights, state.eta.snapshots @ (lam * u)))
    b1 = (
        -0.5 * deps_t * v_aux_sq
        - alpha * eps_t * float(np.dot(v, v))
        + 0.5 * alpha * alpha * deps_t * u_sq
        + alpha * grad_u_sq
        + alpha * grad_pow
        + grad_v_sq
        + 0.5 * spec.kernel.delta2 * eta_sq
        + alpha * eta_u
        - alpha * _g_pairing(state, spec)
        - alpha * float(np.dot(spec.h.coeffs, u))
    )
    return a1, b1


def phase_norms_sq(state: SystemState, spec: ProblemSpec) -> tuple[float, float]:
    """Squared phase-space norms (base level, regular level)."""
    g = spec.grid
    lam = g.eigenvalues
    u, v = state.u.coeffs, state.v.coeffs
    eps_t = float(spec.eps.value(state.t))
    norm_h = float(np.dot(lam, u * u)) + eps_t * float(np.dot(v, v)) + weighted_norm_sq(
        state.eta, spec.history, g
    )
    norm_h1 = (
        float(np.dot(lam * lam, u * u))
        + eps_t * float(np.dot(lam, v * v))
        + weighted_norm_sq(state.eta, spec.history, g, SpaceLevel.M3)
    )
    return norm_h, norm_h1


def _dissipation_terms(state: SystemState, spec: ProblemSpec) -> float:
    """-(1/2) eps' ||v||^2 + ||grad v||^2 + (delta2/2)||eta||^2 + delta (f(v), v)."""
    g = spec.grid
    v = state.v.coeffs
    deps_t = float(spec.eps.slope(state.t))
    return (
        -0.5 * deps_t * float(np.dot(v, v))
        + float(np.dot(g.eigenvalues, v * v))
        + 0.5 * spec.kernel.delta2 * weighted_norm_sq(state.eta, spec.history, g)
        + spec.delta * _f_pairing(state, spec)
    )


class TrajectoryRecorder:
    """Per-step energy bookkeeping attached to a simulation."""

    def __init__(self, spec: ProblemSpec, dt: float):
        self.spec = spec
        self.dt = dt
        self.reports: list[EnergyReport] = []
        self._prev_i1: float | None = None

    def record(self, step_index: int, state: SystemState) -> EnergyReport:
        # diagnostics must not trip on extreme states (a run about to abort)
        with np.errstate(over="ignore", invalid="ignore"):
            return self._record(state)

    def _record(self, state: SystemState) -> EnergyReport:
        spec = self.spec
        i1 = eval_I1(state, spec)
        a1, b1 = eval_A1_B1(state, spec)
        norm_h, norm_h1 = phase_norms_sq(state, spec)
        if self._prev_i1 is None:
            residual = 0.0
        else:
            residual = (i1 - self._prev_i1) / self.dt + _dissipation_terms(state, spec)
        self._prev_i1 = i1
        diss = check_history_dissipation(state.eta, spec.history, spec.grid, spec.kernel)
        rep = EnergyReport(
            t=state.t,
            normH=norm_h,
            normH1=norm_h1,
            I1=i1,
            A1=a1,
            B1=b1,
            diss_residual=residual,
            hist_lhs=diss.lhs,
            hist_rhs=diss.rhs,
        )
        self.reports.append(rep)
        return rep


def monitor_dissipation(reports: Sequence[EnergyReport]) -> tuple[np.ndarray, float]:
    """Residual series of the energy-decay inequality and its maximum."""
    res = np.array([r.diss_residual for r in reports], dtype=float)
    return res, float(res.max(initial=0.0))


@dataclass(frozen=True)
class PairConstants:
    """Configured constants of the pair bound; existential in the analysis,
    so the check below is a diagnostic of these concrete choices."""

    c2_delta: float = 1.0
    c_delta: float = 0.0
    c_growth: float = 1.0


@dataclass(frozen=True)
class PairReport:
    t: np.ndarray
    Atilde1: np.ndarray
    E: np.ndarray
    T: float
    C_Atilde1: float
    Phi_T: float
    lhs: float  # T * Atilde1(T)
    rhs: float  # C_Atilde1 + Phi_T
    bound_rhs: float  # 2*C_Atilde1/T + 2*Phi_T/T

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-3 * (1.0 + abs(self.rhs))


def _tail_integral(t: np.ndarray, q: np.ndarray) -> float:
    """int_0^T (int_r^T q dtau) dr by trapezoid, via prefix sums."""
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (q[1:] + q[:-1]) * np.diff(t))))
    tail = cum[-1] - cum
    return float(np.trapezoid(tail, t))


def eval_pair(
    states1: Iterable[SystemState],
    states2: Iterable[SystemState],
    dt: float,
    spec: ProblemSpec,
    constants: PairConstants = PairConstants(),
) -> PairReport:
    """Distance functionals and the integral bound for a trajectory pair.

    Both iterables must traverse the same time grid.  All time integrals
    use the trapezoid rule on the stored step grid; the doubly nested
    horizon integrals reuse cumulative prefix sums.
    """
    g = spec.grid
    lam = g.eigenvalues
    m = spec.m
    p1 = spec.nonlin.p1

    ts: list[float] = []
    at1: list[float] = []
    e_series: list[float] = []
    q_grad_pair: list[float] = []  # ||grad u1||^{m-1} * int (v1)_x (ubar_x)^2 dx
    q_coef_vt: list[float] = []  # (||grad u1||^m - ||grad u2||^m)（u2, ubar_t)_{H2}
    q_stiff_ubar: list[float] = []  # ||grad u1||^m ||grad ubar||^2
    q_eps_cross: list[float] = []  # eps'(t) (ubar, ubar_t)
    q_coef_u: list[float] = []  # (||grad u1||^m - ||grad u2||^m)(u2, ubar)_{H2}
    q_growth: list[float] = []  # int |ubar|^{p1+1} dx
    q_g_vt: list[float] = []  # (g(u1) - g(u2), ubar_t)
    q_g_u: list[float] = []  # (g(u1) - g(u2), ubar)

    first: tuple | None = None
    last: tuple | None = None

    for s1, s2 in zip(states1, states2):
        if abs(s1.t - s2.t) > 1e-12 * (1.0 + abs(s1.t)):
            raise ValueError("trajectory pair is not on a common time grid")
        u1, v1 = s1.u.coeffs, s1.v.coeffs
        u2, v2 = s2.u.coeffs, s2.v.coeffs
        ub = u1 - u2
        vb = v1 - v2
        etab = s1.eta.snapshots - s2.eta.snapshots
        eps_t = float(spec.eps.value(s1.t))
        deps_t = float(spec.eps.slope(s1.t))

        grad_ub_sq = float(np.dot(lam, ub * ub))
        vb_sq = float(np.dot(vb, vb))
        etab_sq = weighted_norm_sq(etab, spec.history, g)
        eps_vb_sq = eps_t * vb_sq
        a_val = 0.5 * grad_ub_sq + 0.5 * eps_vb_sq + 0.5 * etab_sq
        e_val = grad_ub_sq + eps_vb_sq + etab_sq

        grad1 = float(np.dot(lam, u1 * u1)) ** 0.5
        grad2 = float(np.dot(lam, u2 * u2)) ** 0.5
        pow1, pow2 = grad1**m, grad2**m

        dv1 = gradient_values(v1, g)
        dub = gradient_values(ub, g)
        b0_v1, b1_v1 = gradient_boundary(v1, g)
        b0_ub, b1_ub = gradient_boundary(ub, g)
        cross = g.dx * (
            float(np.dot(dv1, dub * dub))
            + 0.5 * b0_v1 * b0_ub * b0_ub
            + 0.5 * b1_v1 * b1_ub * b1_ub
        )

        if spec.nonlin.g_kind == "zero":
            g_vt = g_u = 0.0
        else:
            gu1 = spec.nonlin.g(to_physical(u1, g))
            gu2 = spec.nonlin.g(to_physical(u2, g))
            dgu = gu1 - gu2
            g_vt = float(g.dx * np.dot(dgu, to_physical(vb, g)))
            g_u = float(g.dx * np.dot(dgu, to_physical(ub, g)))

        if p1 == 1.0:
            growth = float(np.dot(ub, ub))
        else:
            growth = float(g.dx * np.sum(np.abs(to_physical(ub, g)) ** (p1 + 1.0)))

        ts.append(s1.t)
        at1.append(a_val)
        e_series.append(e_val)
        q_grad_pair.append(grad1 ** (m - 1.0) * cross)
        q_coef_vt.append((pow1 - pow2) * float(np.dot(lam, u2 * vb)))
        q_stiff_ubar.append(pow1 * grad_ub_sq)
        q_eps_cross.append(deps_t * float(np.dot(ub, vb)))
        q_coef_u.append((pow1 - pow2) * float(np.dot(lam, u2 * ub)))
        q_growth.append(growth)
        q_g_vt.append(g_vt)
        q_g_u.append(g_u)

        snap = (eps_t, float(np.dot(ub, vb)), grad_ub_sq, pow1, a_val)
        if first is None:
            first = snap
        last = snap

    if first is None or len(ts) < 2:
        raise ValueError("pair evaluation needs at least two stored steps")

    t = np.asarray(ts)
    horizon = float(t[-1] - t[0])
    c2 = constants.c2_delta

    eps_0, uv_0, grad_ub0, pow1_0, a1_0 = first
    eps_T, uv_T, grad_ubT, pow1_T, _ = last
    c_at1 = (
        -0.5 * c2 * pow1_T * grad_ubT
        + 0.5 * c2 * pow1_0 * grad_ub0
        - c2 * constants.c_delta
        + c2 * a1_0
        - eps_T * uv_T
        + eps_0 * uv_0
        - 0.5 * grad_ubT
        + 0.5 * grad_ub0
    )

    qg = np.asarray(q_grad_pair)
    qcv = np.asarray(q_coef_vt)
    qs = np.asarray(q_stiff_ubar)
    qec = np.asarray(q_eps_cross)
    qcu = np.asarray(q_coef_u)
    qgr = np.asarray(q_growth)
    qgv = np.asarray(q_g_vt)
    qgu = np.asarray(q_g_u)

    phi = (
        0.5 * m * c2 * float(np.trapezoid(qg, t))
        - c2 * float(np.trapezoid(qcv, t))
        + 0.5 * float(np.trapezoid(qs, t))
        + float(np.trapezoid(qec, t))
        - float(np.trapezoid(qs, t))
        - float(np.trapezoid(qcu, t))
        + 2.0 * constants.c_growth * float(np.trapezoid(qgr, t)) ** (1.0 / (p1 + 1.0))
        + 0.5 * m * _tail_integral(t, qg)
        - _tail_integral(t, qcv)
        + c2 * float(np.trapezoid(qgv, t))
        + float(np.trapezoid(qgu, t))
        + _tail_integral(t, qgv)
    )

    at1_arr = np.asarray(at1)
    lhs = horizon * float(at1_arr[-1])
    rhs = c_at1 + phi
    return PairReport(
        t=t,
        Atilde1=at1_arr,
        E=np.asarray(e_series),
        T=horizon,
        C_Atilde1=c_at1,
        Phi_T=phi,
        lhs=lhs,
        rhs=rhs,
        bound_rhs=(2.0 * c_at1 + 2.0 * phi) / horizon if horizon > 0 else float("inf"),
    )
