"""Time integration of the first-order system for (u, v, eta).

Per retained mode k the system reads

    u_k' = v_k
    eps(t) v_k' = -(1 + X^{m/2}) lam_k u_k - lam_k v_k
                  - lam_k sum_j w_j eta_{jk} - delta*f(v)_k + g(u)_k + h_k
    eta' = -D_s eta + v,          X = ||grad u||^2,

with D_s the upwind age derivative.  The production stepper is a
semi-implicit backward Euler: all terms linear in the unknowns (the
stiffness with the Kirchhoff coefficient frozen at the current state, the
velocity damping, the memory force, and the age transport) are implicit,
while the pointwise nonlinearities f and g are explicit.  When f is
exactly linear its contribution is absorbed into the implicit solve,
which together with the implicit memory force makes every step dissipate
the discrete energy without error terms.

The history update stays O(K*M) despite being implicit: the transported
snapshot is affine in the new velocity,

    eta+ = (I + dt D_s)^{-1} (eta + dt*1*v+) = eta~ + dt*(psi (x) v+),

with psi = (I + dt D_s)^{-1} 1 independent of the mode, so each mode
still reduces to one scalar solve.  An optional fixed-point sweep
re-freezes the Kirchhoff coefficient at the new displacement.

A classical four-stage Runge-Kutta integrator over the same right-hand
side serves as the convergence oracle at small mode counts and tiny step
sizes; it enforces an explicit stability bound at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Sequence

import numpy as np

from .memory import HistoryField, transport_rhs, weighted_norm_sq
from .model import ProblemSpec
from .spectral import SpectralField, apply_pointwise

__all__ = [
    "SystemState",
    "Scheme",
    "StepperConfig",
    "StepError",
    "OracleInstabilityError",
    "NonFiniteStateError",
    "NumericalAbort",
    "Stepper",
    "StepDetail",
    "ReferenceStepper",
    "SimulationResult",
    "rhs",
    "step_imex",
    "step_reference",
    "stability_bound",
    "initial_state",
    "simulate",
]


@dataclass(frozen=True)
class SystemState:
    """A point in the phase space: displacement, velocity, history, time."""

    t: float
    u: SpectralField
    v: SpectralField
    eta: HistoryField

    def norm_h_sq(self, spec: ProblemSpec) -> float:
        """Squared phase-space norm ||grad u||^2 + eps(t)||v||^2 + ||eta||_M2^2."""
        g = spec.grid
        gu = float(np.dot(g.eigenvalues, self.u.coeffs**2))
        vv = float(np.dot(self.v.coeffs, self.v.coeffs))
        he = weighted_norm_sq(self.eta, spec.history, g)
        return gu + float(spec.eps.value(self.t)) * vv + he


class Scheme(str, Enum):
    IMEX_EULER = "imex_euler"
    REFERENCE_RK4 = "reference_rk4"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: Scheme = Scheme.IMEX_EULER
    newton_tol: float = 1e-10
    newton_max_iter: int = 1

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.newton_max_iter < 0:
            raise ValueError("newton_max_iter must be >= 0")


class StepError(RuntimeError):
    """Fixed-point sweep on the Kirchhoff coefficient failed to settle."""

    def __init__(self, message: str, trace: Sequence[float]):
        super().__init__(message)
        self.trace = list(trace)


@dataclass(frozen=True)
class StepDetail:
    """What a semi-implicit step actually used, for co-integration."""

    eps_new: float
    b_coef: float
    f_explicit: np.ndarray | float
    f_linear_coef: float
    g_proj: np.ndarray | float
    v_new: np.ndarray


class OracleInstabilityError(RuntimeError):
    """The explicit reference integrator left its stability region."""


class NonFiniteStateError(RuntimeError):
    """A step produced non-finite values."""


class NumericalAbort(RuntimeError):
    """Non-finite values appeared during a run; carries the step index."""

    def __init__(self, step_index: int, t: float):
        super().__init__(f"non-finite state at step {step_index} (t = {t:.6g})")
        self.step_index = step_index
        self.t = t


def _forcing_terms(spec: ProblemSpec, u: np.ndarray, v: np.ndarray):
    """Explicit force pieces: (delta*f projection, implicit slope, g projection)."""
    nl = spec.nonlin
    if nl.f_linear_slope is not None:
        f_expl = 0.0
        dlin = spec.delta * nl.f_linear_slope
    else:
        f_expl = spec.delta * apply_pointwise(v, nl.f, spec.grid)
        dlin = 0.0
    if nl.g_kind == "zero":
        g_proj = 0.0
    else:
        g_proj = apply_pointwise(u, nl.g, spec.grid)
    return f_expl, dlin, g_proj


class Stepper:
    """Semi-implicit stepper with precomputed history propagation."""

    def __init__(self, spec: ProblemSpec, cfg: StepperConfig):
        if cfg.scheme is not Scheme.IMEX_EULER:
            raise ValueError("Stepper runs the semi-implicit scheme; use ReferenceStepper for the oracle")
        self.spec = spec
        self.cfg = cfg
        dt = cfg.dt
        hist = spec.history
        m_cells = hist.n_cells
        ds = hist.node_spacings
        # (I + dt*D_s): lower bidiagonal, inflow boundary eta(0) = 0.
        tri = np.zeros((m_cells, m_cells))
        np.fill_diagonal(tri, 1.0 + dt / ds)
        idx = np.arange(1, m_cells)
        tri[idx, idx - 1] = -dt / ds[1:]
        self._prop = np.linalg.inv(tri)
        self._psi = self._prop @ np.ones(m_cells)
        self._s_psi = float(hist.weights @ self._psi)
        self._lam = spec.grid.eigenvalues
        self._w = hist.weights

    def kirchhoff_coefficient(self, u: np.ndarray) -> float:
        x = float(np.dot(self._lam, u * u))
        return 1.0 + x ** (0.5 * self.spec.m)

    def step_detailed(self, state: SystemState) -> tuple[SystemState, "StepDetail"]:
        """Advance one step and expose the pieces the step actually used."""
        spec, cfg = self.spec, self.cfg
        dt = cfg.dt
        lam = self._lam
        u, v, eta = state.u.coeffs, state.v.coeffs, state.eta.snapshots

        t_new = state.t + dt
        eps_new = float(spec.eps.value(t_new))
        f_expl, dlin, g_proj = _forcing_terms(spec, u, v)
        eta_tilde = self._prop @ eta
        mem = self._w @ eta_tilde
        h = spec.h.coeffs

        with np.errstate(over="ignore", invalid="ignore"):
            b_coef = self.kirchhoff_coefficient(u)
            trace = [b_coef]
            v_new = u_new = None
            for sweep in range(cfg.newton_max_iter + 1):
                denom = eps_new + dt * lam * (1.0 + dt * (b_coef + self._s_psi)) + dt * dlin
                numer = eps_new * v - dt * (b_coef * lam * u + lam * mem + f_expl - g_proj - h)
                v_new = numer / denom
                u_new = u + dt * v_new
                if sweep == cfg.newton_max_iter:
                    break
                b_next = self.kirchhoff_coefficient(u_new)
                trace.append(b_next)
                if abs(b_next - b_coef) <= cfg.newton_tol * (1.0 + abs(b_coef)):
                    b_coef = b_next
                    break
                b_coef = b_next
        if not np.isfinite(v_new.sum()) or not np.isfinite(u_new.sum()):
            raise NonFiniteStateError(f"step from t = {state.t:.6g} produced non-finite values")
        if (
            cfg.newton_max_iter >= 2
            and len(trace) >= 2
            and abs(trace[-1] - trace[-2]) > cfg.newton_tol * (1.0 + abs(trace[-2]))
        ):
            raise StepError(
                f"Kirchhoff fixed point did not settle in {cfg.newton_max_iter} sweeps", trace
            )

        eta_new = eta_tilde + dt * np.outer(self._psi, v_new)
        new_state = SystemState(
            t=t_new,
            u=SpectralField(u_new),
            v=SpectralField(v_new),
            eta=HistoryField(eta_new),
        )
        detail = StepDetail(
            eps_new=eps_new,
            b_coef=b_coef,
            f_explicit=f_expl,
            f_linear_coef=dlin,
            g_proj=g_proj,
            v_new=v_new,
        )
        return new_state, detail

    def step(self, state: SystemState) -> SystemState:
        return self.step_detailed(state)[0]

    def advance_linear_part(
        self, state: SystemState, detail: "StepDetail", forcing: np.ndarray | float
    ) -> SystemState:
        """One step of an auxiliary system sharing this step's coefficients.

        The auxiliary equation carries the same frozen stiffness, damping
        and memory operators but no perturbation of its own; ``forcing``
        is whatever source data its right-hand side prescribes.  Because
        the update is affine in the state for fixed coefficients, two
        auxiliary systems whose data sum to the full step's reproduce the
        full solution exactly.
        """
        dt = self.cfg.dt
        lam = self._lam
        u, v, eta = state.u.coeffs, state.v.coeffs, state.eta.snapshots
        eta_tilde = self._prop @ eta
        mem = self._w @ eta_tilde
        denom = detail.eps_new + dt * lam * (1.0 + dt * (detail.b_coef + self._s_psi))
        numer = detail.eps_new * v - dt * (detail.b_coef * lam * u + lam * mem - forcing)
        v_new = numer / denom
        u_new = u + dt * v_new
        eta_new = eta_tilde + dt * np.outer(self._psi, v_new)
        return SystemState(
            t=state.t + dt,
            u=SpectralField(u_new),
            v=SpectralField(v_new),
            eta=HistoryField(eta_new),
        )


def rhs(state: SystemState, spec: ProblemSpec):
    """Instantaneous time derivatives (du, dv, deta) of the full system."""
    lam = spec.grid.eigenvalues
    u, v = state.u.coeffs, state.v.coeffs
    eps_t = float(spec.eps.value(state.t))
    if eps_t <= 0:
        raise ValueError("eps(t) must stay positive")
    b_coef = 1.0 + float(np.dot(lam, u * u)) ** (0.5 * spec.m)
    nl = spec.nonlin
    if nl.f_linear_slope is not None:
        f_proj = nl.f_linear_slope * v
    else:
        f_proj = apply_pointwise(v, nl.f, spec.grid)
    g_proj = 0.0 if nl.g_kind == "zero" else apply_pointwise(u, nl.g, spec.grid)
    mem = spec.history.weights @ state.eta.snapshots
    dv = (-b_coef * lam * u - lam * v - lam * mem - spec.delta * f_proj + g_proj + spec.h.coeffs) / eps_t
    deta = transport_rhs(state.eta, state.v, spec.history)
    return SpectralField(v.copy()), SpectralField(dv), deta


class ReferenceStepper:
    """Classical RK4 over the same right-hand side; the convergence oracle."""

    def __init__(self, spec: ProblemSpec, cfg: StepperConfig):
        self.spec = spec
        self.cfg = cfg
        hist = spec.history
        self._lam = spec.grid.eigenvalues
        self._w = hist.weights
        self._inv_ds_col = (1.0 / hist.node_spacings)[:, None]
        self._phi = spec.grid._phi
        self._phi_t_dx = spec.grid.dx * spec.grid._phi.T
        self._half_m = 0.5 * spec.m

    def _rhs(self, t: float, u: np.ndarray, v: np.ndarray, eta: np.ndarray):
        spec = self.spec
        lam = self._lam
        eps_t = float(spec.eps.value(t))
        b_coef = 1.0 + float(np.dot(lam, u * u)) ** self._half_m
        nl = spec.nonlin
        if nl.f_linear_slope is not None:
            f_proj = nl.f_linear_slope * v
        else:
            f_proj = self._phi_t_dx @ nl.f(self._phi @ v)
        g_proj = 0.0 if nl.g_kind == "zero" else self._phi_t_dx @ nl.g(self._phi @ u)
        mem = self._w @ eta
        dv = (-b_coef * lam * u - lam * v - lam * mem - spec.delta * f_proj + g_proj + spec.h.coeffs) / eps_t
        deta = np.empty_like(eta)
        np.subtract(eta[1:], eta[:-1], out=deta[1:])
        deta[0] = eta[0]
        deta *= -self._inv_ds_col
        deta += v[None, :]
        return v, dv, deta

    def step(self, state: SystemState) -> SystemState:
        dt = self.cfg.dt
        t, u, v, eta = state.t, state.u.coeffs, state.v.coeffs, state.eta.snapshots
        size0 = float(np.abs(u).sum() + np.abs(v).sum() + np.abs(eta).sum())

        k1u, k1v, k1e = self._rhs(t, u, v, eta)
        k2u, k2v, k2e = self._rhs(t + 0.5 * dt, u + 0.5 * dt * k1u, v + 0.5 * dt * k1v, eta + 0.5 * dt * k1e)
        k3u, k3v, k3e = self._rhs(t + 0.5 * dt, u + 0.5 * dt * k2u, v + 0.5 * dt * k2v, eta + 0.5 * dt * k2e)
        k4u, k4v, k4e = self._rhs(t + dt, u + dt * k3u, v + dt * k3v, eta + dt * k3e)

        c = dt / 6.0
        u_new = u + c * (k1u + 2 * k2u + 2 * k3u + k4u)
        v_new = v + c * (k1v + 2 * k2v + 2 * k3v + k4v)
        eta_new = eta + c * (k1e + 2 * k2e + 2 * k3e + k4e)

        size1 = float(np.abs(u_new).sum() + np.abs(v_new).sum() + np.abs(eta_new).sum())
        if not np.isfinite(size1) or size1 > 10.0 * size0 + 1e-12:
            raise OracleInstabilityError(
                f"reference step at t = {t:.6g} grew the state by more than 10x; reduce dt"
            )
        return SystemState(
            t=t + dt,
            u=SpectralField(u_new),
            v=SpectralField(v_new),
            eta=HistoryField(eta_new),
        )


def step_imex(state: SystemState, spec: ProblemSpec, cfg: StepperConfig) -> SystemState:
    return Stepper(spec, cfg).step(state)


def step_reference(state: SystemState, spec: ProblemSpec, cfg: StepperConfig) -> SystemState:
    bound = stability_bound(spec, state)
    if cfg.dt > bound:
        raise OracleInstabilityError(f"dt = {cfg.dt} exceeds the explicit stability bound {bound:.3e}")
    return ReferenceStepper(spec, cfg).step(state)


def stability_bound(spec: ProblemSpec, state: SystemState, horizon: float = 0.0) -> float:
    """Conservative explicit step-size bound for the reference integrator.

    Estimates the stiffest decay rate among the damped velocity modes
    (lam_K scaled by the smallest mass coefficient over the horizon) and
    the age transport (1/min node spacing), and places 2.5 units of the
    negative real axis inside the RK4 stability region.
    """
    lam_max = float(spec.grid.eigenvalues[-1])
    eps_min = float(spec.eps.value(state.t + max(horizon, 0.0)))
    x = float(np.dot(spec.grid.eigenvalues, state.u.coeffs**2))
    b_coef = 1.0 + x ** (0.5 * spec.m)
    rate_v = lam_max * (1.0 + b_coef) / eps_min + spec.delta / eps_min
    rate_s = float(1.0 / np.min(spec.history.node_spacings))
    return 2.5 / max(rate_v, rate_s)


def initial_state(
    spec: ProblemSpec,
    u0_amp: float = 1.0,
    u0_mode: int = 1,
    v0_amp: float = 0.0,
    v0_mode: int = 1,
) -> SystemState:
    """Single-mode initial data with a fresh (zero) history."""
    u0 = SpectralField.mode(spec.grid, u0_mode, u0_amp) if u0_amp != 0.0 else SpectralField.zero(spec.grid)
    v0 = SpectralField.mode(spec.grid, v0_mode, v0_amp) if v0_amp != 0.0 else SpectralField.zero(spec.grid)
    return SystemState(t=0.0, u=u0, v=v0, eta=HistoryField.zero(spec.history, spec.grid))


@dataclass
class SimulationResult:
    reports: list
    final_state: SystemState
    dt: float
    n_steps: int


def simulate(
    spec: ProblemSpec,
    cfg: StepperConfig,
    t_final: float,
    ic: SystemState | None = None,
    observers: Sequence[Callable[[int, SystemState], None]] = (),
    record_energy: bool = True,
) -> SimulationResult:
    """Advance the configured initial data to t_final.

    The number of steps is round(t_final/dt).  Observers are invoked with
    (step_index, state), including the initial state at index 0.  A
    non-finite state aborts with the offending step index.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    state = ic if ic is not None else initial_state(spec)
    n_steps = int(round(t_final / cfg.dt)) if t_final > 0 else 0

    recorder = None
    if record_energy:
        from .energy import TrajectoryRecorder

        recorder = TrajectoryRecorder(spec, cfg.dt)
        recorder.record(0, state)
    for obs in observers:
        obs(0, state)

    if cfg.scheme is Scheme.IMEX_EULER:
        stepper: Stepper | ReferenceStepper = Stepper(spec, cfg)
    else:
        stepper = ReferenceStepper(spec, cfg)

    for i in range(1, n_steps + 1):
        try:
            state = stepper.step(state)
        except NonFiniteStateError as exc:
            raise NumericalAbort(i, state.t + cfg.dt) from exc
        if not np.isfinite(state.v.coeffs.sum()) or not np.isfinite(state.u.coeffs.sum()):
            raise NumericalAbort(i, state.t)
        if recorder is not None:
            recorder.record(i, state)
        for obs in observers:
            obs(i, state)

    return SimulationResult(
        reports=recorder.reports if recorder is not None else [],
        final_state=state,
        dt=cfg.dt,
        n_steps=n_steps,
    )


def iter_states(
    spec: ProblemSpec, cfg: StepperConfig, t_final: float, ic: SystemState
) -> Iterator[SystemState]:
    """Lazily yield the trajectory states, initial state first."""
    state = ic
    yield state
    n_steps = int(round(t_final / cfg.dt)) if t_final > 0 else 0
    stepper = Stepper(spec, cfg) if cfg.scheme is Scheme.IMEX_EULER else ReferenceStepper(spec, cfg)
    for i in range(1, n_steps + 1):
        try:
            state = stepper.step(state)
        except NonFiniteStateError as exc:
            raise NumericalAbort(i, state.t + cfg.dt) from exc
        if not np.isfinite(state.v.coeffs.sum()):
            raise NumericalAbort(i, state.t)
        yield state
