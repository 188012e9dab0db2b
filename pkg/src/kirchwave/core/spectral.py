"""Dirichlet sine eigenbasis on an interval, transforms, and Sobolev norms.

The basis on Omega = (0, length) is

    phi_k(x) = sqrt(2/length) * sin(k*pi*x/length),      k = 1..n_modes,

orthonormal in L2(Omega), with -phi_k'' = lam_k * phi_k and
lam_k = (k*pi/length)^2.  Fields are stored by their coefficient vectors,
so the L2 / gradient / Laplacian norms are plain Parseval sums

    ||f||^2      = sum a_k^2
    ||grad f||^2 = sum lam_k a_k^2
    ||lap f||^2  = sum lam_k^2 a_k^2.

Physical-space values live on the uniform collocation grid
x_j = j*length/(n_phys+1), j = 1..n_phys.  For n_phys >= n_modes the
discrete sine transform on that grid inverts the evaluation exactly, and
the quadrature weight dx = length/(n_phys+1) makes the discrete L2 inner
product exact for band-limited fields.  Requiring n_phys >= 2*n_modes
keeps pointwise nonlinearities adequately de-aliased before projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import pi

import numpy as np

__all__ = [
    "DomainGrid",
    "SpectralField",
    "eigenvalue",
    "norm_l2",
    "norm_h2",
    "norm_h3",
    "to_physical",
    "from_physical",
    "apply_pointwise",
    "gradient_values",
    "gradient_boundary",
    "quad_l2_sq",
    "quad_h2_sq",
]


@dataclass(frozen=True)
class DomainGrid:
    """Interval domain with a truncated sine basis and a collocation grid.

    Parameters
    ----------
    n_modes : int
        Number of retained eigenmodes K.
    n_phys : int
        Number of interior collocation points; must be >= 2*n_modes.
    length : float
        Interval length, default pi (which makes lam_1 = 1).
    """

    n_modes: int
    n_phys: int
    length: float = pi

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.n_phys < 2 * self.n_modes:
            raise ValueError("n_phys must be >= 2*n_modes (de-aliasing)")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Dirichlet eigenvalues lam_k = (k*pi/length)^2, k = 1..n_modes."""
        k = np.arange(1, self.n_modes + 1, dtype=float)
        return (k * pi / self.length) ** 2

    @cached_property
    def dx(self) -> float:
        return self.length / (self.n_phys + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior collocation points x_j = j*length/(n_phys+1)."""
        return self.dx * np.arange(1, self.n_phys + 1, dtype=float)

    @cached_property
    def _phi(self) -> np.ndarray:
        # (n_phys, n_modes) evaluation matrix of the orthonormal basis.
        k = np.arange(1, self.n_modes + 1, dtype=float)
        arg = np.outer(self.nodes, k * pi / self.length)
        return np.sqrt(2.0 / self.length) * np.sin(arg)

    @cached_property
    def _dphi(self) -> np.ndarray:
        # (n_phys, n_modes) evaluation matrix of the basis derivatives.
        k = np.arange(1, self.n_modes + 1, dtype=float)
        kk = k * pi / self.length
        arg = np.outer(self.nodes, kk)
        return np.sqrt(2.0 / self.length) * np.cos(arg) * kk

    @cached_property
    def _dphi_boundary(self) -> tuple[np.ndarray, np.ndarray]:
        # Basis derivative values at x = 0 and x = length (gradients do not
        # vanish there; needed for boundary-corrected quadrature).
        k = np.arange(1, self.n_modes + 1, dtype=float)
        kk = k * pi / self.length
        left = np.sqrt(2.0 / self.length) * kk
        right = left * np.where(k.astype(int) % 2 == 0, 1.0, -1.0)
        return left, right


@dataclass(frozen=True)
class SpectralField:
    """A function on Omega represented by its sine-basis coefficients."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 1:
            raise ValueError("coeffs must be a 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls, grid: DomainGrid) -> "SpectralField":
        return cls(np.zeros(grid.n_modes))

    @classmethod
    def mode(cls, grid: DomainGrid, k: int, amplitude: float = 1.0) -> "SpectralField":
        """The field amplitude * phi_k."""
        if not 1 <= k <= grid.n_modes:
            raise IndexError(f"mode index {k} out of range 1..{grid.n_modes}")
        a = np.zeros(grid.n_modes)
        a[k - 1] = amplitude
        return cls(a)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__


def eigenvalue(k: int, grid: DomainGrid) -> float:
    """Eigenvalue lam_k of the k-th Dirichlet sine mode.

    lam_1 is the sharp constant in the Poincare inequality
    lam_1*||f||^2 <= ||grad f||^2 on this domain.
    """
    if not 1 <= k <= grid.n_modes:
        raise IndexError(f"mode index {k} out of range 1..{grid.n_modes}")
    return float(grid.eigenvalues[k - 1])


def _coeffs(f: SpectralField | np.ndarray) -> np.ndarray:
    return f.coeffs if isinstance(f, SpectralField) else np.asarray(f, dtype=float)


def norm_l2(f: SpectralField | np.ndarray, grid: DomainGrid) -> float:
    """L2 norm ||f|| = sqrt(sum a_k^2)."""
    a = _coeffs(f)
    return float(np.sqrt(np.dot(a, a)))


def norm_h2(f: SpectralField | np.ndarray, grid: DomainGrid) -> float:
    """Gradient norm ||grad f|| = sqrt(sum lam_k a_k^2)."""
    a = _coeffs(f)
    return float(np.sqrt(np.dot(grid.eigenvalues, a * a)))


def norm_h3(f: SpectralField | np.ndarray, grid: DomainGrid) -> float:
    """Laplacian norm ||lap f|| = sqrt(sum lam_k^2 a_k^2)."""
    a = _coeffs(f)
    return float(np.sqrt(np.dot(grid.eigenvalues**2, a * a)))


def to_physical(f: SpectralField | np.ndarray, grid: DomainGrid) -> np.ndarray:
    """Evaluate the field at the collocation nodes."""
    return grid._phi @ _coeffs(f)


def from_physical(values: np.ndarray, grid: DomainGrid) -> SpectralField:
    """Project collocation values back onto the retained modes.

    This is the discrete sine analysis with quadrature weight dx; modes
    beyond n_modes are discarded (Galerkin truncation).  Round trips with
    :func:`to_physical` are exact to roundoff for band-limited fields.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_phys,):
        raise ValueError(f"expected {grid.n_phys} collocation values, got {values.shape}")
    return SpectralField(grid.dx * (grid._phi.T @ values))


def apply_pointwise(f: SpectralField | np.ndarray, func, grid: DomainGrid) -> np.ndarray:
    """Coefficients of the Galerkin projection of func(f(x)).

    Pseudo-spectral route: evaluate on the collocation grid, apply the
    scalar function, project back.  Returns a raw coefficient vector.
    """
    vals = grid._phi @ _coeffs(f)
    return grid.dx * (grid._phi.T @ func(vals))


def gradient_values(f: SpectralField | np.ndarray, grid: DomainGrid) -> np.ndarray:
    """f'(x) at the collocation nodes."""
    return grid._dphi @ _coeffs(f)


def gradient_boundary(f: SpectralField | np.ndarray, grid: DomainGrid) -> tuple[float, float]:
    """f'(0) and f'(length); gradients of Dirichlet fields do not vanish there."""
    a = _coeffs(f)
    left, right = grid._dphi_boundary
    return float(left @ a), float(right @ a)


def quad_l2_sq(f: SpectralField | np.ndarray, grid: DomainGrid) -> float:
    """||f||^2 by collocation quadrature (exact for band-limited fields)."""
    vals = grid._phi @ _coeffs(f)
    return float(grid.dx * np.dot(vals, vals))


def quad_h2_sq(f: SpectralField | np.ndarray, grid: DomainGrid) -> float:
    """||grad f||^2 by trapezoid quadrature with boundary terms.

    The squared gradient does not vanish at the endpoints, so the interior
    collocation sum needs the half-weight boundary contributions to remain
    spectrally accurate.
    """
    a = _coeffs(f)
    interior = grid._dphi @ a
    left, right = grid._dphi_boundary
    g0 = float(left @ a)
    g1 = float(right @ a)
    return float(grid.dx * (np.dot(interior, interior) + 0.5 * g0 * g0 + 0.5 * g1 * g1))
