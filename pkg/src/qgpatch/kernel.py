"""Velocity kernels for patch transport under a screened Poisson inversion.

The velocity field recovered from a vorticity patch is the convolution of the
patch indicator with the kernel

    K(x) = (epsilon / 2 pi) K1(epsilon |x|) x_perp / |x|,   x_perp = (-x2, x1),

the perpendicular gradient of the screened-Laplacian fundamental solution
with inverse screening length ``epsilon`` (the inverse Rossby deformation
radius).  As epsilon -> 0 this degenerates to the planar Euler kernel
K(x) = (1/2 pi) x_perp / |x|^2.

Contour dynamics needs the scalar contour kernel as well: the boundary
integral moves nodes with kappa(|dz|) times the tangent, where kappa is
(1/2 pi) K0(epsilon r) for the screened flow and -(1/2 pi) ln r for Euler.
The "shifted" variant adds the constant ln(epsilon/2)/(2 pi), which is
dynamically null on closed contours (the tangent integrates to zero) but
makes the scalar kernel converge pointwise to the Euler one as epsilon -> 0.

All point operations broadcast over a trailing axis of length 2, so a single
point (2,) and a batch (n, 2) are both accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import DomainError
from .special import k0_grid, k1_grid, k2_grid

__all__ = [
    "Vec2",
    "TWO_PI",
    "DIRAC_PART_COEFFICIENT",
    "KernelMode",
    "biot_savart_kernel",
    "contour_kernel_scalar",
    "kernel_gradient",
    "GradDecomposition",
    "gradient_decomposition",
]

Vec2 = npt.NDArray[np.float64]

TWO_PI: float = 2.0 * math.pi

#: Coefficient of the Dirac-at-origin contribution in the distributional
#: gradient of the vector kernel: grad K = p.v. part + this matrix times a
#: delta at the origin.  Recorded for reference; no operation consumes it.
DIRAC_PART_COEFFICIENT: np.ndarray = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]])

_FAMILIES = ("qgsw", "qgsw-shifted", "euler")


@dataclass(frozen=True)
class KernelMode:
    """Kernel family plus screening parameter.

    ``family`` is one of "qgsw", "qgsw-shifted", "euler"; epsilon must be
    positive for the screened families and is fixed at 0 for Euler.
    """

    family: str
    epsilon: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}")
        if self.family == "euler":
            if self.epsilon != 0.0:
                raise DomainError("euler mode has no screening parameter; epsilon must be 0")
        else:
            if not (self.epsilon > 0.0) or math.isinf(self.epsilon):
                raise DomainError(f"screened modes require epsilon > 0, got {self.epsilon}")

    @classmethod
    def qgsw(cls, epsilon: float) -> "KernelMode":
        return cls("qgsw", float(epsilon))

    @classmethod
    def qgsw_shifted(cls, epsilon: float) -> "KernelMode":
        return cls("qgsw-shifted", float(epsilon))

    @classmethod
    def euler(cls) -> "KernelMode":
        return cls("euler", 0.0)

    @property
    def scalar_shift(self) -> float:
        """Constant added to the scalar contour kernel: ln(epsilon/2)/(2 pi)
        for the shifted family, 0 otherwise."""
        if self.family == "qgsw-shifted":
            return math.log(self.epsilon / 2.0) / TWO_PI
        return 0.0


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise DomainError(f"points must have a trailing axis of length 2, got shape {x.shape}")
    return x


def biot_savart_kernel(mode: KernelMode, x: Vec2) -> Vec2:
    """Vector velocity kernel K(x) of the given mode.

    The shifted family returns the same vector field as the unshifted one:
    the shift lives purely in the scalar contour kernel.
    """
    x = _as_points(x)
    rho = np.sqrt(np.sum(x * x, axis=-1))
    if np.any(rho == 0.0):
        raise DomainError("vector kernel is singular at x = 0")
    perp = np.stack([-x[..., 1], x[..., 0]], axis=-1)
    if mode.family == "euler":
        amp = 1.0 / (TWO_PI * rho * rho)
    else:
        eps = mode.epsilon
        amp = eps * k1_grid(eps * rho) / (TWO_PI * rho)
    return amp[..., None] * perp


def contour_kernel_scalar(mode: KernelMode, r) -> np.ndarray | float:
    """Scalar contour kernel kappa(r) multiplying the tangent in the CDE.

    qgsw: K0(epsilon r)/(2 pi); qgsw-shifted adds ln(epsilon/2)/(2 pi);
    euler: -ln(r)/(2 pi).  As epsilon -> 0 the shifted kernel tends to
    -(ln r + EULER_GAMMA)/(2 pi) pointwise.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0) or np.any(np.isnan(r_arr)):
        raise DomainError("contour kernel requires r > 0")
    if mode.family == "euler":
        out = -np.log(r_arr) / TWO_PI
    else:
        out = k0_grid(mode.epsilon * r_arr) / TWO_PI + mode.scalar_shift
    return out if out.ndim else float(out)


def kernel_gradient(epsilon: float, x: Vec2) -> np.ndarray:
    """Pointwise gradient matrix of the vector kernel, away from 0.

    Entry (i, j) is d_i K^j; shape (..., 2, 2).  Assembled from K1 and its
    derivative K1'(z) = -K0(z) - K1(z)/z.  ``epsilon = 0`` returns the Euler
    limit (the homogeneous degree -2 closed form).  The trace vanishes
    identically (the kernel is divergence-free away from the origin).
    """
    if epsilon < 0.0 or not np.isfinite(epsilon):
        raise DomainError(f"kernel_gradient requires epsilon >= 0, got {epsilon}")
    x = _as_points(x)
    x1, x2 = x[..., 0], x[..., 1]
    rho2 = x1 * x1 + x2 * x2
    if np.any(rho2 == 0.0):
        raise DomainError("kernel gradient is singular at x = 0")
    if epsilon == 0.0:
        rho4 = rho2 * rho2
        out = np.empty(x.shape[:-1] + (2, 2), dtype=float)
        out[..., 0, 0] = 2.0 * x1 * x2 / (TWO_PI * rho4)
        out[..., 0, 1] = (x2 * x2 - x1 * x1) / (TWO_PI * rho4)
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = -out[..., 0, 0]
        return out
    rho = np.sqrt(rho2)
    z = epsilon * rho
    k1v = k1_grid(z)
    k1p = -k0_grid(z) - k1v / z
    c = epsilon / TWO_PI
    # d1K1 = -c x1 x2 (eps K1'/rho^2 - K1/rho^3) etc.; grouped by monomial.
    a = epsilon * k1p / rho2 - k1v / (rho2 * rho)   # radial combination
    b = k1v / rho
    d1k1 = -c * x1 * x2 * a
    d2k2 = c * x1 * x2 * a
    d2k1 = -c * (b + x2 * x2 * a)
    d1k2 = c * (b + x1 * x1 * a)
    out = np.empty(x.shape[:-1] + (2, 2), dtype=float)
    out[..., 0, 0] = d1k1
    out[..., 0, 1] = d1k2
    out[..., 1, 0] = d2k1
    out[..., 1, 1] = d2k2
    return out


@dataclass(frozen=True)
class GradDecomposition:
    """Split of the kernel gradient into a zero-circle-average part ``s1``
    (its entries are pure second angular harmonics, so they average to zero
    over every circle centered at the origin) and an integrable part ``s2``
    (entries bounded by epsilon^2 K0(epsilon |x|), whose radial integral is
    finite).  s1 + s2 reproduces the gradient away from the origin."""

    s1: np.ndarray
    s2: np.ndarray


def gradient_decomposition(epsilon: float, x: Vec2) -> GradDecomposition:
    """Decompose kernel_gradient(epsilon, x) as s1 + s2 (see GradDecomposition).

    s1 = (1/2pi) [[ e^2 x1 x2 K2 / rho^2,        e (x2^2-x1^2) K1 / rho^3 ],
                  [ e (x2^2-x1^2) K1 / rho^3,   -e^2 x1 x2 K2 / rho^2     ]]
    s2 = (1/2pi) [[ 0,                          -e^2 x1^2 K0 / rho^2 ],
                  [ e^2 x2^2 K0 / rho^2,         0                   ]]
    """
    if not epsilon > 0.0:
        raise DomainError(f"gradient_decomposition requires epsilon > 0, got {epsilon}")
    x = _as_points(x)
    x1, x2 = x[..., 0], x[..., 1]
    rho2 = x1 * x1 + x2 * x2
    if np.any(rho2 == 0.0):
        raise DomainError("gradient decomposition is singular at x = 0")
    rho = np.sqrt(rho2)
    z = epsilon * rho
    k0v = k0_grid(z)
    k1v = k1_grid(z)
    k2v = k2_grid(z)
    e2 = epsilon * epsilon
    diag = e2 * x1 * x2 * k2v / rho2 / TWO_PI
    off = epsilon * (x2 * x2 - x1 * x1) * k1v / (rho2 * rho) / TWO_PI
    s1 = np.empty(x.shape[:-1] + (2, 2), dtype=float)
    s1[..., 0, 0] = diag
    s1[..., 0, 1] = off
    s1[..., 1, 0] = off
    s1[..., 1, 1] = -diag
    s2 = np.zeros_like(s1)
    s2[..., 0, 1] = -e2 * x1 * x1 * k0v / rho2 / TWO_PI
    s2[..., 1, 0] = e2 * x2 * x2 * k0v / rho2 / TWO_PI
    return GradDecomposition(s1=s1, s2=s2)
