"""Fading-memory kernels, the truncated history grid, and history algebra.

The history variable eta(t; x, s) tracks relative displacement over the
age coordinate s in (0, infinity), weighted by a kernel mu that must be
non-negative, non-increasing, integrable with integral delta1, and decay
at least exponentially: mu' + delta2*mu <= 0 with delta2 >= delta1 > 0.

Discretely the age axis is truncated at s_max (where the kernel tail mass
drops below tail_tol * delta1) and partitioned into M cells graded by an
exponential map, fine near s = 0 where the kernel concentrates.  Each
cell carries its exact kernel mass as quadrature weight and represents
the history by one spectral field at the cell's kernel-weighted centroid.
The transport derivative in s is first-order upwind with inflow boundary
eta(s=0) = 0, which is unconditionally dissipative on this grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .spectral import DomainGrid, SpectralField

__all__ = [
    "KernelKind",
    "KernelSpec",
    "KernelHypothesisError",
    "ConfigurationError",
    "HistoryGrid",
    "HistoryField",
    "SpaceLevel",
    "make_exponential_kernel",
    "make_slow_decay_kernel",
    "make_custom_kernel",
    "build_history_grid",
    "weighted_inner",
    "weighted_norm_sq",
    "transport_rhs",
    "check_history_dissipation",
    "HistoryDissipation",
]

GRADING_STRENGTH = 5.0  # exponent of the cell-boundary map; fixed, not configurable


class KernelHypothesisError(ValueError):
    """A kernel violates one of its admissibility conditions."""


class ConfigurationError(ValueError):
    """History grid parameters outside their admissible ranges."""


class KernelKind(str, Enum):
    EXPONENTIAL = "exponential"
    CUSTOM = "custom"


class SpaceLevel(str, Enum):
    """Which Sobolev pairing the mu-weighted inner product uses."""

    M1 = "M1"
    M2 = "M2"
    M3 = "M3"


_LEVEL_POWER = {SpaceLevel.M1: 0, SpaceLevel.M2: 1, SpaceLevel.M3: 2}


@dataclass(frozen=True)
class KernelSpec:
    """A memory kernel together with its two decay constants."""

    kind: KernelKind
    delta1: float
    delta2: float
    mu: Callable[[np.ndarray], np.ndarray]
    dmu: Callable[[np.ndarray], np.ndarray]


def make_exponential_kernel(delta1: float, delta2: float, strict: bool = True) -> KernelSpec:
    """The canonical kernel mu(s) = delta1*delta2*exp(-delta2*s).

    Integrates to delta1 exactly and satisfies mu' + delta2*mu = 0, the
    equality case of the decay condition, which makes the discrete
    history-dissipation inequality sharp.  With ``strict=False`` the
    constant ordering is left to the hypothesis validators instead of
    raising here.
    """
    if not delta1 > 0:
        raise KernelHypothesisError("(1.15): delta1 must be positive")
    if strict and delta1 > delta2:
        raise KernelHypothesisError("(1.16): delta2 >= delta1 violated")
    d1, d2 = float(delta1), float(delta2)

    def mu(s):
        return d1 * d2 * np.exp(-d2 * np.asarray(s, dtype=float))

    def dmu(s):
        return -d2 * mu(s)

    return KernelSpec(KernelKind.EXPONENTIAL, d1, d2, mu, dmu)


def make_slow_decay_kernel(delta1: float, delta2: float) -> KernelSpec:
    """Validator fixture: true decay rate is half the declared delta2.

    mu(s) = delta1*(delta2/2)*exp(-(delta2/2)*s) still integrates to
    delta1 and is non-negative and non-increasing, but
    mu' + delta2*mu = (delta2/2)*mu > 0 everywhere, so the declared decay
    condition fails at every age node.
    """
    if not delta1 > 0:
        raise KernelHypothesisError("(1.15): delta1 must be positive")
    d1, d2 = float(delta1), float(delta2)
    rate = 0.5 * d2

    def mu(s):
        return d1 * rate * np.exp(-rate * np.asarray(s, dtype=float))

    def dmu(s):
        return -rate * mu(s)

    return KernelSpec(KernelKind.CUSTOM, d1, d2, mu, dmu)


def make_custom_kernel(
    mu: Callable[[np.ndarray], np.ndarray],
    dmu: Callable[[np.ndarray], np.ndarray],
    delta1: float,
    delta2: float,
) -> KernelSpec:
    """Wrap a tabulated kernel; admissibility is checked by the validators."""
    if not delta1 > 0:
        raise KernelHypothesisError("(1.15): delta1 must be positive")
    if delta1 > delta2:
        raise KernelHypothesisError("(1.16): delta2 >= delta1 violated")
    return KernelSpec(KernelKind.CUSTOM, float(delta1), float(delta2), mu, dmu)


@dataclass(frozen=True)
class HistoryGrid:
    """Truncated, graded age grid with exact kernel cell masses.

    ``s_nodes`` are the kernel-weighted cell centroids (with s_0 = 0
    implicit for the transport stencil), ``weights`` the cell integrals of
    mu, ``boundaries`` the M+1 cell edges, and ``mu_boundaries`` the kernel
    values at the edges (used by the dissipation pairing, where the exact
    cell integrals of mu' are the edge differences of mu).
    """

    s_nodes: np.ndarray
    weights: np.ndarray
    boundaries: np.ndarray
    mu_boundaries: np.ndarray
    s_max: float
    tail_tol: float

    @property
    def n_cells(self) -> int:
        return self.s_nodes.size

    @property
    def node_spacings(self) -> np.ndarray:
        """s_j - s_{j-1} with the implicit s_0 = 0."""
        return np.diff(np.concatenate(([0.0], self.s_nodes)))


def build_history_grid(kernel: KernelSpec, n_cells: int, tail_tol: float = 1e-8) -> HistoryGrid:
    """Construct the graded age grid for a kernel.

    The truncation point comes from the exponential tail bound
    mu(s) <= mu(0) * exp(-delta2 * s), so that the discarded tail mass is
    at most tail_tol * delta1.  Cell boundaries follow the exponential map
    b_j = s_max * (e^{g j/M} - 1)/(e^g - 1); weights are exact cell
    integrals of mu (closed form for the exponential kernel, trapezoid
    otherwise) and nodes sit at the kernel-weighted cell centroids.
    """
    if n_cells < 4:
        raise ConfigurationError(f"history grid needs at least 4 cells, got {n_cells}")
    if not 0.0 < tail_tol < 0.1:
        raise ConfigurationError(f"tail_tol must lie in (0, 0.1), got {tail_tol}")

    d1, d2 = kernel.delta1, kernel.delta2
    mu0 = float(kernel.mu(np.array([0.0]))[0])
    s_max = float(np.log(mu0 / (d2 * d1 * tail_tol)) / d2)

    xi = np.arange(n_cells + 1, dtype=float) / n_cells
    b = s_max * np.expm1(GRADING_STRENGTH * xi) / np.expm1(GRADING_STRENGTH)
    b[0], b[-1] = 0.0, s_max

    if kernel.kind is KernelKind.EXPONENTIAL:
        edge = d1 * np.exp(-d2 * b)
        w = edge[:-1] - edge[1:]
        # kernel-weighted centroid of [p, q]: q - (q-p)/(1 - e^{-d2 (q-p)}) + 1/d2
        h = np.diff(b)
        s = b[1:] - h / (-np.expm1(-d2 * h)) + 1.0 / d2
    else:
        mu_b = np.asarray(kernel.mu(b), dtype=float)
        h = np.diff(b)
        w = 0.5 * (mu_b[:-1] + mu_b[1:]) * h
        denom = mu_b[:-1] + mu_b[1:]
        safe = np.where(denom > 0, denom, 1.0)
        s = np.where(
            denom > 0,
            (b[:-1] * mu_b[:-1] + b[1:] * mu_b[1:]) / safe,
            0.5 * (b[:-1] + b[1:]),
        )
    if np.any(w < 0):
        raise KernelHypothesisError("(1.14): kernel produced negative cell masses")
    if not np.all(np.diff(np.concatenate(([0.0], s))) > 0):
        raise ConfigurationError("history grid nodes are not strictly increasing")

    mu_bounds = np.asarray(kernel.mu(b), dtype=float)
    return HistoryGrid(
        s_nodes=s,
        weights=w,
        boundaries=b,
        mu_boundaries=mu_bounds,
        s_max=s_max,
        tail_tol=float(tail_tol),
    )


@dataclass(frozen=True)
class HistoryField:
    """History snapshots on the age grid: row j is the field at age s_j."""

    snapshots: np.ndarray  # (n_cells, n_modes)

    def __post_init__(self) -> None:
        arr = np.asarray(self.snapshots, dtype=float)
        if arr.ndim != 2:
            raise ValueError("snapshots must be a 2-d array (n_cells, n_modes)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("history snapshots must be finite")
        object.__setattr__(self, "snapshots", arr)

    @classmethod
    def zero(cls, hist: HistoryGrid, grid: DomainGrid) -> "HistoryField":
        return cls(np.zeros((hist.n_cells, grid.n_modes)))

    @classmethod
    def from_profile(cls, profile: np.ndarray, f: SpectralField, hist: HistoryGrid) -> "HistoryField":
        """Separable history profile(s_j) * f."""
        p = np.asarray(profile, dtype=float)
        if p.shape != (hist.n_cells,):
            raise ValueError("profile must have one value per age node")
        return cls(np.outer(p, f.coeffs))

    def __add__(self, other: "HistoryField") -> "HistoryField":
        return HistoryField(self.snapshots + other.snapshots)

    def __sub__(self, other: "HistoryField") -> "HistoryField":
        return HistoryField(self.snapshots - other.snapshots)

    def __mul__(self, scalar: float) -> "HistoryField":
        return HistoryField(self.snapshots * float(scalar))

    __rmul__ = __mul__


def _snap(a: HistoryField | np.ndarray) -> np.ndarray:
    return a.snapshots if isinstance(a, HistoryField) else np.asarray(a, dtype=float)


def weighted_inner(
    a: HistoryField | np.ndarray,
    b: HistoryField | np.ndarray,
    hist: HistoryGrid,
    grid: DomainGrid,
    level: SpaceLevel = SpaceLevel.M2,
) -> float:
    """Kernel-weighted inner product sum_j w_j (a_j, b_j) at a Sobolev level."""
    sa, sb = _snap(a), _snap(b)
    if sa.shape != sb.shape or sa.shape != (hist.n_cells, grid.n_modes):
        raise ValueError("history fields do not match the grids")
    power = _LEVEL_POWER[level]
    lam_p = grid.eigenvalues**power if power else None
    prod = sa * sb
    per_cell = prod @ lam_p if lam_p is not None else prod.sum(axis=1)
    return float(np.dot(hist.weights, per_cell))


def weighted_norm_sq(
    a: HistoryField | np.ndarray,
    hist: HistoryGrid,
    grid: DomainGrid,
    level: SpaceLevel = SpaceLevel.M2,
) -> float:
    return weighted_inner(a, a, hist, grid, level)


def transport_rhs(
    eta: HistoryField | np.ndarray,
    v: SpectralField | np.ndarray,
    hist: HistoryGrid,
) -> HistoryField:
    """Time derivative of the history: -D_s eta + v.

    D_s is first-order upwind with the inflow value eta(s=0) = 0:
    (D_s eta)_1 = eta_1/s_1 and (D_s eta)_j = (eta_j - eta_{j-1})/(s_j - s_{j-1}).
    """
    snaps = _snap(eta)
    vc = v.coeffs if isinstance(v, SpectralField) else np.asarray(v, dtype=float)
    shifted = np.vstack((np.zeros_like(snaps[:1]), snaps[:-1]))
    dsnaps = (snaps - shifted) / hist.node_spacings[:, None]
    return HistoryField(-dsnaps + vc[None, :])


@dataclass(frozen=True)
class HistoryDissipation:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs


def check_history_dissipation(
    eta: HistoryField | np.ndarray,
    hist: HistoryGrid,
    grid: DomainGrid,
    kernel: KernelSpec,
    level: SpaceLevel = SpaceLevel.M2,
) -> HistoryDissipation:
    """Both sides of the history dissipation inequality at one state.

    lhs is the pairing of eta with its age transport, evaluated in the
    integrated-by-parts form: with the inflow boundary eta(0) = 0 the
    continuum identity (eta, eta_s) = -1/2 int mu'(s) |eta|^2 ds turns the
    exact per-cell integrals of mu' (edge differences of mu) into the
    pairing weights.  rhs is (delta2/2) * ||eta||^2 at the same level.
    Because int_cell mu' <= -delta2 * int_cell mu whenever the kernel
    decay condition holds pointwise, lhs >= rhs exactly on the grid, with
    equality for the exponential kernel.
    """
    snaps = _snap(eta)
    lam_p = grid.eigenvalues ** _LEVEL_POWER[level]
    lhs_w = 0.5 * (hist.mu_boundaries[:-1] - hist.mu_boundaries[1:])
    sq = (snaps * snaps) @ lam_p
    lhs = float(np.dot(lhs_w, sq))
    rhs = float(0.5 * kernel.delta2 * np.dot(hist.weights, sq))
    return HistoryDissipation(lhs=lhs, rhs=rhs)
