"""Pydantic request/response models for the simulation service.

The problem document mirrors the on-disk JSON config; every model forbids
unknown keys so malformed configs fail loudly at the boundary.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..core.memory import build_history_grid, make_exponential_kernel, make_slow_decay_kernel
from ..core.model import (
    ProblemSpec,
    eps_constant,
    eps_exp_relax,
    eps_sine_fixture,
    nonlin_spec,
)
from ..core.spectral import DomainGrid, SpectralField

import numpy as np


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(StrictModel):
    length: float = Field(default=3.141592653589793, gt=0)
    n_modes: int = Field(default=32, ge=1)
    n_phys: Optional[int] = None


class KernelConfig(StrictModel):
    kind: Literal["exponential", "slow_decay"] = "exponential"
    delta1: float = Field(default=1.0, gt=0)
    delta2: float = Field(default=1.0, gt=0)
    M: int = Field(default=64, ge=1)
    tail_tol: float = 1e-8


class EpsilonConfig(StrictModel):
    kind: Literal["exp_relax", "constant", "sine"] = "exp_relax"
    a: float = 0.01
    eps0: float = 1.0


class FConfig(StrictModel):
    kind: Literal["linear", "offset"] = "linear"
    slope: float = 1.0
    offset: float = 0.0


class GConfig(StrictModel):
    kind: Literal["sine", "zero"] = "sine"
    kappa: float = 0.5


class HConfig(StrictModel):
    mode_amplitudes: list[float] = Field(default_factory=lambda: [0.1])


class LyapunovConfig(StrictModel):
    alpha: float = 0.05
    lam: float = Field(default=1.2, alias="lambda")
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ProblemConfig(StrictModel):
    domain: DomainConfig = Field(default_factory=DomainConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    epsilon: EpsilonConfig = Field(default_factory=EpsilonConfig)
    m: float = 2.0
    delta: float = 0.5
    f: FConfig = Field(default_factory=FConfig)
    g: GConfig = Field(default_factory=GConfig)
    h: HConfig = Field(default_factory=HConfig)
    lyapunov: LyapunovConfig = Field(default_factory=LyapunovConfig)

    def build(self) -> ProblemSpec:
        grid = DomainGrid(
            n_modes=self.domain.n_modes,
            n_phys=self.domain.n_phys or 2 * self.domain.n_modes,
            length=self.domain.length,
        )
        if self.kernel.kind == "exponential":
            kernel = make_exponential_kernel(self.kernel.delta1, self.kernel.delta2, strict=False)
        else:
            kernel = make_slow_decay_kernel(self.kernel.delta1, self.kernel.delta2)
        history = build_history_grid(kernel, self.kernel.M, self.kernel.tail_tol)

        if self.epsilon.kind == "exp_relax":
            eps = eps_exp_relax(self.epsilon.a, self.epsilon.eps0)
        elif self.epsilon.kind == "constant":
            eps = eps_constant(self.epsilon.eps0)
        else:
            eps = eps_sine_fixture(self.epsilon.a, self.epsilon.eps0)

        nonlin = nonlin_spec(
            f_kind=self.f.kind,
            g_kind=self.g.kind,
            kappa=self.g.kappa,
            f_slope=self.f.slope,
            f_offset=self.f.offset,
        )
        amps = np.zeros(grid.n_modes)
        given = np.asarray(self.h.mode_amplitudes, dtype=float)
        amps[: min(given.size, grid.n_modes)] = given[: grid.n_modes]
        return ProblemSpec(
            grid=grid,
            kernel=kernel,
            history=history,
            eps=eps,
            m=self.m,
            delta=self.delta,
            nonlin=nonlin,
            h=SpectralField(amps),
            alpha=self.lyapunov.alpha,
            lam=self.lyapunov.lam,
        )


def default_problem_config() -> ProblemConfig:
    return ProblemConfig()


class InitialCondition(StrictModel):
    u0_mode: int = 1
    u0_amp: float = 1.0
    v0_mode: int = 1
    v0_amp: float = 0.0


class ViolationModel(StrictModel):
    equation: str
    message: str


class LyapunovCheckModel(StrictModel):
    name: str
    satisfied: bool
    detail: str


class CheckRequest(StrictModel):
    problem: ProblemConfig


class CheckResponse(StrictModel):
    ok: bool
    violations: list[ViolationModel]
    lyapunov_checks: list[LyapunovCheckModel]
    lyapunov_all_satisfied: bool


class SimulateRequest(StrictModel):
    problem: ProblemConfig
    t_final: float = Field(gt=0)
    dt: float = Field(gt=0)
    ic: InitialCondition = Field(default_factory=InitialCondition)


class EnergySeries(StrictModel):
    columns: list[str]
    rows: list[list[float]]


class SimulateResponse(StrictModel):
    energy: EnergySeries
    n_steps: int
    final_norm_h_sq: float


class DecomposeRequest(StrictModel):
    problem: ProblemConfig
    t_final: float = Field(gt=0)
    dt: float = Field(gt=0)
    ic: InitialCondition = Field(default_factory=InitialCondition)
    floor_window: float = 0.1


class DecayFitModel(StrictModel):
    rate: float
    floor: float
    r_squared: float


class W2BoundModel(StrictModel):
    sup_after_burnin: float
    sup_full: float
    t_at_sup: float
    bounded_evidence: bool


class DecomposeResponse(StrictModel):
    series: EnergySeries
    fit: Optional[DecayFitModel]
    fit_error: Optional[str] = None
    w2: W2BoundModel
    max_additivity_defect: float


class EnsembleConfig(StrictModel):
    n_traj: int = Field(default=10, ge=1)
    radii: list[float] = Field(default_factory=lambda: [1.0, 10.0])
    seed: int = 2024
    t_final: float = 25.0
    dt: float = 2e-3
    threshold_R: Optional[float] = None


class AbsorbRequest(StrictModel):
    problem: ProblemConfig
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)


class ProbeEntryModel(StrictModel):
    id: int
    radius: float
    entry_time: Optional[float]
    stayed: bool
    long_time_sup: float


class AbsorbResponse(StrictModel):
    threshold_R: float
    entries: list[ProbeEntryModel]
    max_entry_time: Optional[float]
    all_absorbed: bool


class PairConstantsModel(StrictModel):
    c2_delta: float = 1.0
    c_delta: float = 0.0
    c_growth: float = 1.0


class PairRequest(StrictModel):
    problem: ProblemConfig
    t_final: float = Field(default=10.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    ic1: InitialCondition = Field(default_factory=InitialCondition)
    ic2: InitialCondition = Field(default_factory=lambda: InitialCondition(u0_amp=1.1))
    constants: PairConstantsModel = Field(default_factory=PairConstantsModel)


class PairResponse(StrictModel):
    t: list[float]
    Atilde1: list[float]
    E: list[float]
    T: float
    C_Atilde1: float
    Phi_T: float
    lhs: float
    rhs: float
    bound_rhs: float
    holds: bool


class ConvergeRequest(StrictModel):
    problem: ProblemConfig
    dts: list[float] = Field(default_factory=lambda: [4e-3, 2e-3, 1e-3])
    t_final: float = 1.0
    dt_ref: float = 1e-5
    ic: InitialCondition = Field(default_factory=InitialCondition)


class ConvergenceRowModel(StrictModel):
    dt: float
    error: float
    ratio: Optional[float]
    valid: bool
    note: str = ""


class ConvergeResponse(StrictModel):
    rows: list[ConvergenceRowModel]
    dt_ref: float
