"""Modified Bessel functions of integer order.

These are the radial profiles of the screened-Poisson kernel: K0 is the
fundamental-solution profile, K1 its radial derivative, and the I_n enter
through Wronskian identities and the steady-circle velocity oracle.

Evaluation strategy for K_n (scalar reference path):

* ``z <= SERIES_ASYMPTOTIC_SWITCH``: ascending series summed in extended
  precision.  The log and psi pieces of the series cancel by a factor that
  reaches ~1e6 already at z = 8 and grows like e^z, so float64 summation is
  conditioning-limited to ~4e-10 there; summing in extended precision keeps
  the result correctly rounded over the whole range.
* ``z > SERIES_ASYMPTOTIC_SWITCH``: large-argument asymptotic expansion in
  float64, truncated at its smallest-magnitude term.  The optimal-truncation
  error decays like e^(-2z) and is ~1e-15 at the switch point.

n >= 2 uses the forward recurrence K_{n+1} = K_{n-1} + (2n/z) K_n from K_0 and
K_1 (all terms positive: no cancellation).

For array workloads (pairwise kernel sums) the ``*_grid`` helpers delegate to
scipy's Cephes routines; tests pin their agreement with the reference path.

References: Abramowitz & Stegun, Handbook of Mathematical Functions, 9.6-9.8.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass
from typing import NamedTuple

import mpmath as mp
import numpy as np
from scipy import special as _sp

from .errors import DomainError, UnsupportedRangeError

__all__ = [
    "EULER_GAMMA",
    "SERIES_ASYMPTOTIC_SWITCH",
    "EvalStatus",
    "BesselValue",
    "modified_bessel_k",
    "modified_bessel_k_checked",
    "modified_bessel_i",
    "bessel_k_derivative",
    "SmoothKernelParts",
    "kernel_series_parts",
    "k0_grid",
    "k1_grid",
    "k2_grid",
    "i0_grid",
    "i1_grid",
]

#: Euler-Mascheroni constant; psi(1) = -EULER_GAMMA and
#: psi(m+1) = sum_{k<=m} 1/k - EULER_GAMMA.
EULER_GAMMA: float = float(np.euler_gamma)

#: Branch switch between the ascending series and the asymptotic expansion.
#: Chosen where the optimally truncated asymptotic reaches float64 rounding
#: (~1e-15); the extended-precision series is correctly rounded on its whole
#: side, so both branches meet the 1e-12 contract with margin.
SERIES_ASYMPTOTIC_SWITCH: float = 16.0

#: Beyond this the e^(-z) factor underflows through the subnormal range.
_UNDERFLOW_GUARD_Z: float = 700.0


class EvalStatus(enum.Enum):
    OK = "ok"
    OVERFLOW = "overflow"
    UNDERFLOW = "underflow"


class BesselValue(NamedTuple):
    value: float
    status: EvalStatus


def _validate_order(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise DomainError(f"order must be a nonnegative integer, got {n!r}")
    if n < 0:
        raise DomainError(f"order must be a nonnegative integer, got {n}")
    return int(n)


def _validate_positive_z(z) -> float:
    z = float(z)
    if math.isnan(z):
        raise DomainError("argument must not be NaN")
    if z <= 0.0:
        raise DomainError(f"modified Bessel K is singular at z = 0 and undefined for z <= 0 (got z = {z})")
    return z


def _k_small(n: int, z: float) -> float:
    """K_n(z) for 0 < z <= switch: extended-precision ascending series,
    forward recurrence for n >= 2, single rounding at the end."""
    # Working precision: 16 target digits + cancellation allowance.  The
    # series loses ~ z/ln(10)*log10(e) ~ 0.43 z digits to cancellation.
    dps = 26 + int(0.5 * z)
    with mp.workdps(dps):
        zz = mp.mpf(z)
        half = zz / 2
        q = half * half
        lg = mp.log(half)

        def series(order: int) -> mp.mpf:
            # 0.5 (z/2)^{-order} sum_{k<order} (order-k-1)!/k! (-q)^k
            #   + (-1)^{order+1} ln(z/2) I_order(z)
            #   + (-1)^order 0.5 (z/2)^order
            #       sum_m (psi(m+1)+psi(order+m+1)) q^m / (m! (order+m)!)
            fin = mp.mpf(0)
            if order > 0:
                sgn_q = mp.mpf(1)
                for k in range(order):
                    fin += mp.factorial(order - k - 1) / mp.factorial(k) * sgn_q
                    sgn_q *= -q
                fin *= mp.mpf("0.5") * half ** (-order)
            log_sign = -1 if order % 2 == 0 else 1
            psi_sign = 1 if order % 2 == 0 else -1
            base = half ** order / mp.factorial(order)  # m = 0 term of I_order
            psi_a = -mp.euler                           # psi(1)
            psi_b = -mp.euler + mp.fsum(mp.mpf(1) / i for i in range(1, order + 1))
            total = fin
            m = 0
            while True:
                term = base * (log_sign * lg + psi_sign * mp.mpf("0.5") * (psi_a + psi_b))
                total += term
                # Truncate when the next term cannot move the running sum at
                # the 1e-18 relative level (meaningful here: extended precision).
                if m >= 2 and abs(term) < mp.mpf("1e-18") * abs(total):
                    break
                m += 1
                base *= q / (m * (order + m))
                psi_a += mp.mpf(1) / m
                psi_b += mp.mpf(1) / (order + m)
            return total

        if n == 0:
            return float(series(0))
        k_prev = series(0)
        k_cur = series(1)
        for j in range(1, n):
            k_prev, k_cur = k_cur, k_prev + 2 * j / zz * k_cur
        return float(k_cur)


def _k_asymptotic_01(n: int, z: float) -> float:
    """K_n(z) ~ sqrt(pi/2z) e^{-z} [1 + sum_k prod_{j<=k}(4n^2-(2j-1)^2)/(k!(8z)^k)],
    truncated at the smallest-magnitude term."""
    mu = 4.0 * n * n
    s = 1.0
    term = 1.0
    smallest = math.inf
    k = 1
    while k < 300:
        term *= (mu - (2.0 * k - 1.0) ** 2) / (8.0 * z * k)
        if abs(term) >= smallest:
            break
        s += term
        smallest = abs(term)
        k += 1
    return math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) * s


def _k_large(n: int, z: float) -> float:
    k_prev = _k_asymptotic_01(0, z)
    if n == 0:
        return k_prev
    k_cur = _k_asymptotic_01(1, z)
    for j in range(1, n):
        k_prev, k_cur = k_cur, k_prev + 2.0 * j / z * k_cur
    return k_cur


def modified_bessel_k_checked(n: int, z: float) -> BesselValue:
    """K_n(z) with a saturation flag.

    Values that overflow float64 (tiny z with n >= 2) saturate to inf and
    values whose e^{-z} factor underflows (z beyond ~700) saturate to 0.0;
    the accompanying status reports which happened.
    """
    n = _validate_order(n)
    z = _validate_positive_z(z)
    if z <= SERIES_ASYMPTOTIC_SWITCH:
        value = _k_small(n, z)
    else:
        value = _k_large(n, z)
    if math.isinf(value):
        return BesselValue(math.inf, EvalStatus.OVERFLOW)
    if value == 0.0 or (z > _UNDERFLOW_GUARD_Z and abs(value) < sys.float_info.min):
        return BesselValue(max(value, 0.0), EvalStatus.UNDERFLOW)
    return BesselValue(value, EvalStatus.OK)


def modified_bessel_k(n: int, z: float) -> float:
    """Modified Bessel function of the second kind, integer order n >= 0.

    Saturates on overflow/underflow; use :func:`modified_bessel_k_checked`
    to observe the saturation status.
    """
    return modified_bessel_k_checked(n, z).value


def modified_bessel_i(n: int, z: float) -> float:
    """Modified Bessel function of the first kind by its ascending series.

    All series terms are positive (no cancellation); compensated float64
    summation is correctly rounded to ~1e-15 on the validated range
    0 <= z <= 50.  Larger z is refused rather than silently extrapolated.
    """
    n = _validate_order(n)
    z = float(z)
    if math.isnan(z) or z < 0.0:
        raise DomainError(f"modified_bessel_i requires z >= 0, got {z}")
    if z > 50.0:
        raise UnsupportedRangeError(
            f"modified_bessel_i series path is validated for z <= 50, got z = {z}"
        )
    if z == 0.0:
        return 1.0 if n == 0 else 0.0
    half = z / 2.0
    q = half * half
    # (z/2)^n / n! without intermediate overflow (n can be large).
    term = math.exp(n * math.log(half) - math.lgamma(n + 1))
    total = 0.0
    comp = 0.0  # Neumaier compensation
    m = 0
    while True:
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if term < 1e-18 * total and m >= 2:
            break
        m += 1
        term *= q / (m * (n + m))
        if m > 10_000:  # unreachable on the validated range
            break
    return total + comp


def bessel_k_derivative(n: int, z: float) -> float:
    """d/dz K_n(z) via the recurrence -K_{n-1}(z) - (n/z) K_n(z).

    The equivalent form -K_{n+1}(z) + (n/z) K_n(z) agrees to rounding
    (tests pin the two against each other); K_{-1} = K_1.
    """
    n = _validate_order(n)
    z = _validate_positive_z(z)
    if n == 0:
        return -modified_bessel_k(1, z)
    return -modified_bessel_k(n - 1, z) - (n / z) * modified_bessel_k(n, z)


@dataclass(frozen=True)
class SmoothKernelParts:
    """Entire-series factors of the kernel profiles near the origin:

        K0(r) = -ln(r/2) (1 + h1(r)) + h2(r)
        K1(r) = 1/r + (r/2) ln(r/2) g1(r) - (r/4) g2(r)

    1 + h1 = I0 and (r/2) g1 = I1; h2 and g2 carry the psi-weighted series.
    Limits at r -> 0: h1 -> 0, h2 -> -EULER_GAMMA, g1 -> 1,
    g2 -> 1 - 2 EULER_GAMMA.
    """

    r: float
    h1: float
    h2: float
    g1: float
    g2: float


def kernel_series_parts(r: float) -> SmoothKernelParts:
    """Evaluate the four entire-series factors at 0 < r <= 8.

    Each series has nonnegative terms past the first two (the psi weights
    change sign once), so float64 with compensated summation is accurate to
    ~1e-15 on the parts themselves.  The K0/K1 reconstruction identities are
    conditioning-limited near r = 8 (the log piece cancels against h2 by a
    factor ~4e6); that is a property of the identity, not of the parts.
    """
    r = float(r)
    if math.isnan(r) or r <= 0.0:
        raise DomainError(f"kernel_series_parts requires r > 0, got {r}")
    if r > 8.0:
        raise DomainError(f"kernel_series_parts is restricted to r <= 8, got {r}")
    q = (r / 2.0) ** 2

    def comp_sum(coeff_iter) -> float:
        total = 0.0
        comp = 0.0
        for t in coeff_iter:
            s = total + t
            if abs(total) >= abs(t):
                comp += (total - s) + t
            else:
                comp += (t - s) + total
            total = s
        return total + comp

    def h1_terms():
        base = 1.0
        m = 0
        while True:
            m += 1
            base *= q / (m * m)
            yield base
            if base < 1e-18:
                return

    def h2_terms():
        base = 1.0
        psi = -EULER_GAMMA
        m = 0
        while True:
            yield psi * base
            m += 1
            base *= q / (m * m)
            psi += 1.0 / m
            if base * (abs(psi) + 1.0) < 1e-19:
                return

    def g1_terms():
        base = 1.0  # q^m / (m!(m+1)!)
        m = 0
        while True:
            yield base
            m += 1
            base *= q / (m * (m + 1))
            if base < 1e-18:
                return

    def g2_terms():
        base = 1.0
        psi_a = -EULER_GAMMA       # psi(k+1)
        psi_b = 1.0 - EULER_GAMMA  # psi(k+2)
        k = 0
        while True:
            yield (psi_a + psi_b) * base
            k += 1
            base *= q / (k * (k + 1))
            psi_a += 1.0 / k
            psi_b += 1.0 / (k + 1)
            if base * (abs(psi_a + psi_b) + 1.0) < 1e-19:
                return

    return SmoothKernelParts(
        r=r,
        h1=comp_sum(h1_terms()),
        h2=comp_sum(h2_terms()),
        g1=comp_sum(g1_terms()),
        g2=comp_sum(g2_terms()),
    )


# ---------------------------------------------------------------------------
# Vectorized float64 paths for array workloads (pairwise kernel sums, scans).
# Cephes via scipy; agreement with the scalar reference path is pinned by
# tests at <= 1e-12 relative, so the fast path stays continuously validated.

def k0_grid(z: np.ndarray) -> np.ndarray:
    """Vectorized K0 on positive arrays (no domain checks: hot path)."""
    return _sp.k0(z)


def k1_grid(z: np.ndarray) -> np.ndarray:
    """Vectorized K1 on positive arrays (no domain checks: hot path)."""
    return _sp.k1(z)


def k2_grid(z: np.ndarray) -> np.ndarray:
    """Vectorized K2 = K0 + (2/z) K1 (forward recurrence)."""
    return _sp.k0(z) + 2.0 / z * _sp.k1(z)


def i0_grid(z: np.ndarray) -> np.ndarray:
    """Vectorized I0 on arrays."""
    return _sp.i0(z)


def i1_grid(z: np.ndarray) -> np.ndarray:
    """Vectorized I1 on arrays."""
    return _sp.i1(z)
