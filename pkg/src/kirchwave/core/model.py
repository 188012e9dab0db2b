"""Problem data for the damped Kirchhoff wave model and its validators.

A :class:`ProblemSpec` bundles everything the dynamics needs: the spatial
grid, the memory kernel and its age grid, the time-dependent mass
coefficient eps(t), the Kirchhoff exponent m, the velocity perturbation
delta*f(u_t), the nonlinearity g with antiderivative G, the forcing h,
and the two auxiliary-functional parameters (alpha, lambda).

Every structural hypothesis on the data becomes one named check in
:func:`validate_hypotheses`.  Checks are identified by the rule tags used
throughout reports and CLI errors, e.g. "(1.4)" for f(0) = 0; asymptotic
conditions are tested on finite sampling grids (|s| <= 1e3, t <= 50) as a
documented proxy.  Violations are returned as data, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .memory import (
    HistoryGrid,
    KernelSpec,
    build_history_grid,
    make_exponential_kernel,
)
from .spectral import DomainGrid, SpectralField

__all__ = [
    "EpsilonKind",
    "EpsilonSpec",
    "NonlinearitySpec",
    "ProblemSpec",
    "Violation",
    "LyapunovCheck",
    "LyapunovReport",
    "eps_exp_relax",
    "eps_constant",
    "eps_sine_fixture",
    "nonlin_spec",
    "default_problem",
    "validate_hypotheses",
    "validate_lyapunov_params",
]

# Sampling grids for the finite-range proxies of asymptotic hypotheses.
_S_GRID = np.concatenate(
    [
        -np.logspace(-3, 3, 301)[::-1],
        np.linspace(-0.999, 0.999, 201),
        np.logspace(-3, 3, 301),
    ]
)
_T_GRID = np.linspace(0.0, 50.0, 2001)


class EpsilonKind(str, Enum):
    EXP_RELAX = "exp_relax"
    CONSTANT = "constant"
    SINE = "sine"  # validator fixture: oscillating, not decreasing


@dataclass(frozen=True)
class EpsilonSpec:
    """Time-dependent mass coefficient eps(t) with its declared bound L."""

    kind: EpsilonKind
    a: float
    eps0: float
    bound_L: float
    value: Callable[[float], float]
    slope: Callable[[float], float]


def _round_up_half(x: float) -> float:
    return float(np.ceil(2.0 * x) / 2.0)


def eps_exp_relax(a: float = 0.01, eps0: float = 1.0) -> EpsilonSpec:
    """eps(t) = a + (eps0 - a) e^{-t}: decreasing with limit a.

    The declared bound L is sup(|eps| + |eps'|) = 2*eps0 - a, rounded up
    to the next half unit so the default instance reports L = 2.
    """
    a, eps0 = float(a), float(eps0)
    gap = eps0 - a
    return EpsilonSpec(
        kind=EpsilonKind.EXP_RELAX,
        a=a,
        eps0=eps0,
        bound_L=_round_up_half(eps0 + abs(gap)),
        value=lambda t: a + gap * np.exp(-t),
        slope=lambda t: -gap * np.exp(-t),
    )


def eps_constant(value: float = 1.0) -> EpsilonSpec:
    value = float(value)
    return EpsilonSpec(
        kind=EpsilonKind.CONSTANT,
        a=value,
        eps0=value,
        bound_L=_round_up_half(value),
        value=lambda t: value + 0.0 * np.asarray(t, dtype=float),
        slope=lambda t: 0.0 * np.asarray(t, dtype=float),
    )


def eps_sine_fixture(a: float = 0.01, eps0: float = 1.0) -> EpsilonSpec:
    """Oscillating coefficient used to exercise the monotonicity check."""
    a, eps0 = float(a), float(eps0)
    gap = eps0 - a
    return EpsilonSpec(
        kind=EpsilonKind.SINE,
        a=a,
        eps0=eps0,
        bound_L=_round_up_half(eps0 + abs(gap)),
        value=lambda t: a + gap * np.sin(np.asarray(t, dtype=float)),
        slope=lambda t: gap * np.cos(np.asarray(t, dtype=float)),
    )


@dataclass(frozen=True)
class NonlinearitySpec:
    """The velocity perturbation f and the displacement nonlinearity g.

    ``G`` is the antiderivative of g with G(0) = 0, required in closed
    form.  ``f_linear_slope`` is set when f is exactly linear, which lets
    the stepper absorb the perturbation implicitly.
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    p1: float
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], np.ndarray]
    p2: float
    kappa: float
    f_kind: str = "linear"
    g_kind: str = "sine"
    f_linear_slope: float | None = 1.0


def nonlin_spec(
    f_kind: str = "linear",
    g_kind: str = "sine",
    kappa: float = 0.5,
    f_slope: float = 1.0,
    f_offset: float = 0.0,
) -> NonlinearitySpec:
    """Build the nonlinearity pair from named scalar families.

    f kinds: "linear" (slope*s) and "offset" (slope*s + offset, a fixture
    violating f(0) = 0).  g kinds: "sine" (kappa*sin s, antiderivative
    kappa*(1 - cos u)) and "zero".
    """
    f_slope = float(f_slope)
    f_offset = float(f_offset)
    if f_kind == "linear":
        f = lambda s: f_slope * np.asarray(s, dtype=float)
        df = lambda s: f_slope + 0.0 * np.asarray(s, dtype=float)
        slope: float | None = f_slope
    elif f_kind == "offset":
        f = lambda s: f_slope * np.asarray(s, dtype=float) + f_offset
        df = lambda s: f_slope + 0.0 * np.asarray(s, dtype=float)
        slope = None
    else:
        raise ValueError(f"unknown f kind {f_kind!r}")

    kappa = float(kappa)
    if g_kind == "sine":
        g = lambda s: kappa * np.sin(np.asarray(s, dtype=float))
        dg = lambda s: kappa * np.cos(np.asarray(s, dtype=float))
        G = lambda u: kappa * (1.0 - np.cos(np.asarray(u, dtype=float)))
    elif g_kind == "zero":
        g = lambda s: 0.0 * np.asarray(s, dtype=float)
        dg = lambda s: 0.0 * np.asarray(s, dtype=float)
        G = lambda u: 0.0 * np.asarray(u, dtype=float)
    else:
        raise ValueError(f"unknown g kind {g_kind!r}")

    return NonlinearitySpec(
        f=f,
        df=df,
        p1=1.0,
        g=g,
        dg=dg,
        G=G,
        p2=1.0,
        kappa=kappa,
        f_kind=f_kind,
        g_kind=g_kind,
        f_linear_slope=slope,
    )


@dataclass(frozen=True)
class ProblemSpec:
    grid: DomainGrid
    kernel: KernelSpec
    history: HistoryGrid
    eps: EpsilonSpec
    m: float
    delta: float
    nonlin: NonlinearitySpec
    h: SpectralField
    alpha: float
    lam: float

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)


def default_problem(
    n_modes: int = 32,
    n_phys: int | None = None,
    history_cells: int = 64,
    tail_tol: float = 1e-8,
    kappa: float = 0.5,
    h_amplitude: float = 0.1,
    delta: float = 0.5,
    m: float = 2.0,
) -> ProblemSpec:
    """The canonical desk-scale instance.

    Interval (0, pi) with 32 modes, exponential kernel with
    delta1 = delta2 = 1 on 64 graded age cells, relaxing mass coefficient
    eps(t) = 0.01 + 0.99 e^{-t}, Kirchhoff exponent m = 2, perturbation
    delta = 0.5 with linear f, g = 0.5 sin, forcing 0.1*phi_1, and
    auxiliary parameters alpha = 0.05, lambda = 1.2.
    """
    grid = DomainGrid(n_modes=n_modes, n_phys=n_phys or 2 * n_modes)
    kernel = make_exponential_kernel(1.0, 1.0)
    history = build_history_grid(kernel, history_cells, tail_tol)
    h = SpectralField.mode(grid, 1, h_amplitude) if h_amplitude != 0.0 else SpectralField.zero(grid)
    return ProblemSpec(
        grid=grid,
        kernel=kernel,
        history=history,
        eps=eps_exp_relax(a=0.01, eps0=1.0),
        m=float(m),
        delta=float(delta),
        nonlin=nonlin_spec(kappa=kappa),
        h=h,
        alpha=0.05,
        lam=1.2,
    )


@dataclass(frozen=True)
class Violation:
    """One failed hypothesis check, tagged by its rule identifier."""

    equation: str
    message: str

    def __str__(self) -> str:
        return f"{self.equation}: {self.message}"


def validate_hypotheses(spec: ProblemSpec) -> list[Violation]:
    """Run every structural hypothesis check; empty list means all pass."""
    out: list[Violation] = []
    lam1 = float(spec.grid.eigenvalues[0])
    eps, nl, ker = spec.eps, spec.nonlin, spec.kernel

    ev = np.asarray(eps.value(_T_GRID), dtype=float)
    es = np.asarray(eps.slope(_T_GRID), dtype=float)
    if np.any(es > 1e-12):
        out.append(Violation("(1.2)/(1.3)", "eps not decreasing on the validation grid"))
    if not ev[-1] > 0 or not eps.a > 0:
        out.append(Violation("(1.2)", "eps must stay positive with positive limit a"))
    elif abs(ev[-1] - eps.a) > 0.05 * max(eps.a, 1e-12) and eps.kind is not EpsilonKind.SINE:
        out.append(Violation("(1.2)", f"eps(t) does not approach its declared limit a={eps.a}"))
    sup = float(np.max(np.abs(ev) + np.abs(es)))
    if sup > eps.bound_L + 1e-12:
        out.append(Violation("(1.3)", f"sup(|eps|+|eps'|) = {sup:.6g} exceeds L = {eps.bound_L}"))

    f0 = float(nl.f(np.array([0.0]))[0])
    if abs(f0) > 1e-12:
        out.append(Violation("(1.4)", f"f(0) = {f0:.6g} != 0"))
    tail = np.abs(_S_GRID) >= 10.0
    dfv = np.asarray(nl.df(_S_GRID), dtype=float)
    if np.min(dfv[tail]) <= 0.0:
        out.append(Violation("(1.5)", "f' is not bounded below by a positive constant for large |s|"))
    fv = np.asarray(nl.f(_S_GRID), dtype=float)
    growth_f = np.abs(fv) / (1.0 + np.abs(_S_GRID) ** nl.p1)
    if not np.all(np.isfinite(growth_f)):
        out.append(Violation("(1.6)", "f growth ratio diverges on the validation grid"))

    dgv = np.asarray(nl.dg(_S_GRID), dtype=float)
    growth_g = np.abs(dgv) / (1.0 + np.abs(_S_GRID) ** (nl.p2 - 1.0))
    if not np.all(np.isfinite(growth_g)):
        out.append(Violation("(1.7)", "g' growth ratio diverges on the validation grid"))
    gv = np.asarray(nl.g(_S_GRID), dtype=float)
    ratio = gv / _S_GRID
    if float(np.max(ratio)) >= lam1:
        out.append(
            Violation(
                "(1.8)/(3.8)",
                f"sup g(s)/s = {float(np.max(ratio)):.6g} is not below lambda_1 = {lam1:.6g}",
            )
        )

    s_nodes = spec.history.s_nodes
    mu_v = np.asarray(ker.mu(s_nodes), dtype=float)
    dmu_v = np.asarray(ker.dmu(s_nodes), dtype=float)
    if np.any(mu_v < 0):
        out.append(Violation("(1.14)", "mu < 0 at some age node"))
    if np.any(dmu_v > 1e-14):
        out.append(Violation("(1.14)", "mu' > 0 at some age node"))
    mass = float(np.sum(spec.history.weights))
    if not (ker.delta1 * (1.0 - spec.history.tail_tol) - 1e-12 <= mass <= ker.delta1 + 1e-12):
        out.append(Violation("(1.15)", f"grid kernel mass {mass:.6g} inconsistent with delta1 = {ker.delta1}"))
    decay = dmu_v + ker.delta2 * mu_v
    if np.any(decay > 1e-12 * max(1.0, float(np.max(np.abs(mu_v))))):
        out.append(Violation("(1.16)", "mu' + delta2*mu > 0 at some age node"))
    if ker.delta2 < ker.delta1:
        out.append(Violation("(1.16)", f"delta2 = {ker.delta2} < delta1 = {ker.delta1}"))

    if not 0.0 < spec.delta < 1.0:
        out.append(Violation("§1", f"0 < delta < 1 required, got delta = {spec.delta}"))
    if spec.m < 1.0:
        out.append(Violation("§1", f"Kirchhoff exponent m >= 1 required, got m = {spec.m}"))

    return out


@dataclass(frozen=True)
class LyapunovCheck:
    name: str
    satisfied: bool
    detail: str


@dataclass(frozen=True)
class LyapunovReport:
    checks: tuple[LyapunovCheck, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)


def validate_lyapunov_params(spec: ProblemSpec) -> LyapunovReport:
    """Evaluate the sufficient-condition constraints on (alpha, lambda).

    eps(t) is replaced by its supremum eps0 (worst case).  These are
    sufficient conditions for the positivity of the perturbed functional
    pair, not for well-posedness, so failures downgrade the related
    diagnostics instead of stopping a run.
    """
    lam1 = float(spec.grid.eigenvalues[0])
    a, lam, L, eps0 = spec.alpha, spec.lam, spec.eps.bound_L, spec.eps.eps0
    checks = []

    ok = lam1 < lam < 1.5 * lam1
    checks.append(
        LyapunovCheck(
            "lambda window",
            ok,
            f"lambda_1 < lambda < 1.5*lambda_1: {lam1:.6g} < {lam:.6g} < {1.5 * lam1:.6g}",
        )
    )

    lhs = -(a * a) / (2 * lam1) * eps0 - lam / (4 * lam1) - 1.0 / (2 * lam1) + (1 + a) / 2
    ok = lhs > 0.125
    checks.append(
        LyapunovCheck(
            "A1 coercivity",
            ok,
            f"-alpha^2/(2 lam1) eps0 - lambda/(4 lam1) - 1/(2 lam1) + (1+alpha)/2 = {lhs:.6g} > 1/8",
        )
    )

    ok = 0.0 < a < lam1 / L
    checks.append(LyapunovCheck("alpha window", ok, f"0 < alpha < lambda_1/L = {lam1 / L:.6g}, alpha = {a:.6g}"))

    q = (1.0 + L / (2 * lam1)) * a * a + (1.0 / (2 * lam1) - 1.0) + 0.5
    ok = q <= 0.0
    checks.append(
        LyapunovCheck(
            "B1 integrability",
            ok,
            f"(1 + L/(2 lam1)) alpha^2 + (1/(2 lam1) - 1) + 1/2 = {q:.6g} <= 0",
        )
    )

    ok = 0.0 < lam + 4 * a < 1.5 * lam1
    checks.append(
        LyapunovCheck(
            "lambda+4alpha window",
            ok,
            f"0 < lambda + 4 alpha = {lam + 4 * a:.6g} < 1.5*lambda_1 = {1.5 * lam1:.6g}",
        )
    )

    return LyapunovReport(checks=tuple(checks))
