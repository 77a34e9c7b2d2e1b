"""Closed-curve discretization on uniform periodic nodes.

A contour is a counterclockwise simple closed curve sampled at the uniform
parameters alpha_j = 2 pi j / N.  Differentiation, resampling, and the
integral functionals all exploit the uniform periodic grid: derivatives are
spectral (FFT), and the trapezoid rule on such grids integrates trigonometric
polynomials exactly, so area/perimeter/centroid converge spectrally for
smooth curves.
"""
from __future__ import annotations

import csv
import math
from typing import Sequence

import numpy as np
from scipy.signal import resample as _fourier_resample

from .errors import ContourError, DomainError

__all__ = [
    "Contour",
    "make_circle",
    "make_ellipse",
    "tangent",
    "area",
    "perimeter",
    "centroid",
    "chord_arc_constant",
    "resample",
    "contour_distance",
    "write_contour_csv",
    "read_contour_csv",
]

_MIN_NODES = 16


def _validate_nodes(nodes: np.ndarray) -> np.ndarray:
    nodes = np.ascontiguousarray(nodes, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise ContourError(f"nodes must have shape (N, 2), got {nodes.shape}")
    n = nodes.shape[0]
    if n < _MIN_NODES or n % 2 != 0:
        raise ContourError(f"node count must be even and >= {_MIN_NODES}, got {n}")
    if not np.all(np.isfinite(nodes)):
        raise ContourError("nodes must be finite")
    return nodes


def _signed_area(nodes: np.ndarray) -> float:
    # Shoelace on the node polygon; only the sign is consumed here, the
    # spectral functional below is used for reported areas.
    x, y = nodes[:, 0], nodes[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _is_simple(nodes: np.ndarray) -> bool:
    """Reject self-intersecting node polygons (figure-eights and worse).

    Tests every non-adjacent segment pair for transversal crossing; exact
    touching (measure zero) is not chased.
    """
    n = len(nodes)
    p = nodes
    q = np.roll(nodes, -1, axis=0)
    d = q - p
    i, j = np.triu_indices(n, k=2)
    # adjacent through the wrap-around: segment pair (0, n-1)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]

    def cross(v, w):
        return v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]

    r = d[i]
    s = d[j]
    pq = p[j] - p[i]
    denom = cross(r, s)
    t_num = cross(pq, s)
    u_num = cross(pq, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    hit = (denom != 0) & (t > 0) & (t < 1) & (u > 0) & (u < 1)
    return not bool(np.any(hit))


class Contour:
    """Immutable uniform-parameter sampling of a simple closed CCW curve.

    Construction validates shape, node count (even, >= 16), finiteness,
    pairwise-distinct nodes, counterclockwise orientation (positive signed
    area), and simplicity (no transversal self-intersection of the node
    polygon).
    """

    __slots__ = ("_nodes",)

    def __init__(self, nodes, *, _validated: bool = False):
        nodes = _validate_nodes(np.asarray(nodes))
        if not _validated:
            order = np.lexsort((nodes[:, 1], nodes[:, 0]))
            srt = nodes[order]
            if np.any(np.all(srt[1:] == srt[:-1], axis=1)):
                raise ContourError("nodes must be pairwise distinct")
            if _signed_area(nodes) <= 0.0:
                raise ContourError("contour must be counterclockwise (positive signed area)")
            if not _is_simple(nodes):
                raise ContourError("contour is self-intersecting")
        nodes.flags.writeable = False
        self._nodes = nodes

    @property
    def nodes(self) -> np.ndarray:
        """(N, 2) read-only node array."""
        return self._nodes

    @property
    def node_count(self) -> int:
        return self._nodes.shape[0]

    @property
    def alphas(self) -> np.ndarray:
        """Uniform parameters alpha_j = 2 pi j / N."""
        n = self.node_count
        return 2.0 * np.pi * np.arange(n) / n

    def __eq__(self, other) -> bool:
        return isinstance(other, Contour) and np.array_equal(self._nodes, other._nodes)

    def __repr__(self) -> str:
        return f"Contour(N={self.node_count})"


def make_circle(radius: float, node_count: int, center: Sequence[float] = (0.0, 0.0)) -> Contour:
    """Circle of given radius sampled counterclockwise."""
    if not radius > 0.0:
        raise DomainError(f"radius must be positive, got {radius}")
    a = 2.0 * np.pi * np.arange(node_count) / node_count
    nodes = np.stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)], axis=1)
    return Contour(nodes)


def make_ellipse(semi_major: float, semi_minor: float, node_count: int,
                 center: Sequence[float] = (0.0, 0.0)) -> Contour:
    """Axis-aligned ellipse sampled counterclockwise at uniform parameter."""
    if not (semi_major > 0.0 and semi_minor > 0.0):
        raise DomainError("ellipse semi-axes must be positive")
    a = 2.0 * np.pi * np.arange(node_count) / node_count
    nodes = np.stack([center[0] + semi_major * np.cos(a), center[1] + semi_minor * np.sin(a)], axis=1)
    return Contour(nodes)


def _spectral_derivative(values: np.ndarray) -> np.ndarray:
    """d/dalpha of periodic samples via FFT; the Nyquist mode derivative is
    dropped (standard for even N on real data)."""
    n = values.shape[0]
    out = np.empty_like(values)
    for c in range(values.shape[1]):
        coef = np.fft.rfft(values[:, c])
        coef *= 1j * np.arange(coef.shape[0])
        coef[-1] = 0.0
        out[:, c] = np.fft.irfft(coef, n)
    return out


def tangent(contour: Contour) -> np.ndarray:
    """Parameter derivative z_alpha at every node (spectral accuracy)."""
    return _spectral_derivative(contour.nodes)


def area(contour: Contour) -> float:
    """Enclosed area via (1/2) closed-integral (x1 dx2 - x2 dx1)."""
    nodes = contour.nodes
    za = _spectral_derivative(nodes)
    n = contour.node_count
    return float(np.sum(nodes[:, 0] * za[:, 1] - nodes[:, 1] * za[:, 0]) * np.pi / n)


def perimeter(contour: Contour) -> float:
    """Arc length via trapezoid of |z_alpha|."""
    za = _spectral_derivative(contour.nodes)
    n = contour.node_count
    return float(np.sum(np.hypot(za[:, 0], za[:, 1])) * 2.0 * np.pi / n)


def centroid(contour: Contour) -> np.ndarray:
    """Area centroid: first moments by the divergence theorem."""
    nodes = contour.nodes
    za = _spectral_derivative(nodes)
    n = contour.node_count
    h = 2.0 * np.pi / n
    a = area(contour)
    mx = 0.5 * h * float(np.sum(nodes[:, 0] ** 2 * za[:, 1]))
    my = -0.5 * h * float(np.sum(nodes[:, 1] ** 2 * za[:, 0]))
    return np.array([mx / a, my / a])


def chord_arc_constant(contour: Contour) -> float:
    """Two-sided chord/parameter-distance ratio over all node pairs.

    ratio(i, j) = |z_i - z_j| / d_circ(alpha_i, alpha_j) with d_circ the
    periodic parameter distance; returns the max of ratio and 1/ratio over
    all pairs.  The value is scale-dependent: a circle of radius R gives
    max(pi/(2R), R) up to sinc corrections, so circle(1, N) -> pi/2 while
    circle(5, N) -> about 5.
    """
    nodes = contour.nodes
    n = contour.node_count
    alphas = contour.alphas
    i, j = np.triu_indices(n, k=1)
    chord = np.linalg.norm(nodes[i] - nodes[j], axis=1)
    if np.any(chord == 0.0):
        raise ContourError("coincident nodes give a degenerate chord-arc ratio")
    da = np.abs(alphas[i] - alphas[j])
    da = np.minimum(da, 2.0 * np.pi - da)
    ratio = chord / da
    return float(max(ratio.max(), (1.0 / ratio).max()))


def _resample_nodes(nodes: np.ndarray, new_count: int) -> np.ndarray:
    return np.stack(
        [_fourier_resample(nodes[:, 0], new_count), _fourier_resample(nodes[:, 1], new_count)],
        axis=1,
    )


def resample(contour: Contour, node_count: int) -> Contour:
    """Trigonometric interpolation onto ``node_count`` uniform parameters.

    Same-count resampling is the identity to rounding; band-limited curves
    (circles, ellipses) upsample exactly.
    """
    if node_count < _MIN_NODES or node_count % 2 != 0:
        raise DomainError(f"target node count must be even and >= {_MIN_NODES}, got {node_count}")
    return Contour(_resample_nodes(contour.nodes, node_count))


def contour_distance(c1: Contour, c2: Contour) -> float:
    """Parameter-matched sup distance: max_j |z1(alpha_j) - z2(alpha_j)|.

    Requires equal node counts (resample first if they differ).
    """
    if c1.node_count != c2.node_count:
        raise DomainError(
            f"contour_distance requires equal node counts, got {c1.node_count} and {c2.node_count}"
        )
    return float(np.linalg.norm(c1.nodes - c2.nodes, axis=1).max())


def write_contour_csv(contour: Contour, path) -> None:
    """CSV with header alpha,x1,x2; 17 significant digits (lossless doubles)."""
    alphas = contour.alphas
    nodes = contour.nodes
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "x1", "x2"])
        for a, (x1, x2) in zip(alphas, nodes):
            writer.writerow([f"{a:.17g}", f"{x1:.17g}", f"{x2:.17g}"])


def read_contour_csv(path) -> Contour:
    """Read a contour written by :func:`write_contour_csv` (bit-exact)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["alpha", "x1", "x2"]:
            raise ContourError(f"unexpected contour CSV header: {header}")
        rows = [(float(a), float(x1), float(x2)) for a, x1, x2 in reader]
    if not rows:
        raise ContourError("contour CSV has no rows")
    nodes = np.array([[x1, x2] for _, x1, x2 in rows])
    n = len(rows)
    expected = 2.0 * np.pi * np.arange(n) / n
    got = np.array([a for a, _, _ in rows])
    if not np.allclose(got, expected, rtol=0.0, atol=1e-12):
        raise ContourError("contour CSV parameters are not the uniform grid 2 pi j / N")
    return Contour(nodes)
