"""Backend selection and the pure-numpy quadrature kernels.

The hot pairwise loops exist twice: compiled (``qgpatch._core``, Cython) and
vectorized numpy (this module).  Which one runs is decided once at import
time from the ``QGPATCH_BACKEND`` environment variable:

* ``auto`` (default) -- compiled core when the extension imported, else numpy;
* ``core``           -- compiled core, raise if the extension is missing;
* ``python``         -- numpy kernels unconditionally.

Both backends reduce every target row over sources in the same fixed order,
so switching backends or worker counts never changes results beyond the
usual cross-implementation rounding (tested to agree to ~1e-13).

Row-level parallelism uses threads: the compiled loops release the GIL and
the numpy kernels spend their time inside C routines that do the same.  The
worker count only affects wall time; chunk boundaries never change the
per-row arithmetic.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigError
from .special import EULER_GAMMA, i0_grid, k0_grid

TWO_PI = 2.0 * np.pi

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on how the package was built
    _core = None


def _requested_backend() -> str:
    value = os.environ.get("QGPATCH_BACKEND", "auto").strip().lower()
    if value not in ("auto", "core", "python"):
        raise ConfigError(
            f"QGPATCH_BACKEND must be one of auto/core/python, got {value!r}",
            field="QGPATCH_BACKEND",
        )
    return value


_requested = _requested_backend()
if _requested == "core" and _core is None:
    raise ImportError(
        "QGPATCH_BACKEND=core but the compiled extension qgpatch._core is not "
        "available; rebuild the package or use QGPATCH_BACKEND=python"
    )

#: Name of the backend actually in use: "core" or "python".
ACTIVE_BACKEND = "core" if (_core is not None and _requested != "python") else "python"


def worker_count() -> int:
    """Resolve the row-parallelism width from ``QGPATCH_WORKERS``.

    Unset means "use the available parallelism".  The count never changes
    numerical results, only wall time.
    """
    raw = os.environ.get("QGPATCH_WORKERS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(
            f"QGPATCH_WORKERS must be a positive integer, got {raw!r}",
            field="QGPATCH_WORKERS",
        ) from None
    if value < 1:
        raise ConfigError(
            f"QGPATCH_WORKERS must be a positive integer, got {raw!r}",
            field="QGPATCH_WORKERS",
        )
    return value


def log_quadrature_weights(n: int) -> np.ndarray:
    """First row of the circulant weight matrix that integrates
    ``ln|2 sin((a - a')/2)| * f(a')`` exactly for trigonometric polynomials
    ``f`` on the uniform n-point periodic grid.

    The full matrix is ``R[j, k] = logw[|j - k|]``; only this generating row
    is stored since the weights depend on ``j - k`` alone and are even in it.
    """
    if n < 2 or n % 2:
        raise ValueError(f"node count must be even and >= 2, got {n}")
    phi = TWO_PI * np.arange(n) / n
    row = np.zeros(n)
    for m in range(1, n // 2):
        row += 2.0 * np.cos(m * phi) * (-np.pi / m)
    row += np.cos((n // 2) * phi) * (-np.pi / (n // 2))
    return row / n


def _velocity_rows_numpy(nodes, tangents, mode, eps, shift, logw, lo, hi):
    n = nodes.shape[0]
    h = TWO_PI / n
    rows = np.arange(lo, hi)
    cols = np.arange(n)
    diag = rows[:, None] == cols[None, :]
    dx = nodes[lo:hi, 0][:, None] - nodes[None, :, 0]
    dy = nodes[lo:hi, 1][:, None] - nodes[None, :, 1]
    d = np.where(diag, 1.0, np.hypot(dx, dy))
    if logw is None:
        if mode == 0:
            kappa = k0_grid(eps * d) / TWO_PI + shift
        else:
            kappa = -np.log(d) / TWO_PI + shift
        weights = h * np.where(diag, 0.0, kappa)
    else:
        offset = np.abs(rows[:, None] - cols[None, :])
        s = np.where(diag, 1.0, 2.0 * np.abs(np.sin(np.pi * offset / n)))
        tnorm = np.hypot(tangents[lo:hi, 0], tangents[lo:hi, 1])
        if mode == 0:
            z = eps * d
            i0v = i0_grid(z)
            a = -i0v / TWO_PI
            b = (k0_grid(z) + np.log(s) * i0v) / TWO_PI + shift
            a[diag] = -1.0 / TWO_PI
            b[diag] = (-np.log(eps * tnorm / 2.0) - EULER_GAMMA) / TWO_PI + shift
        else:
            a = np.full_like(d, -1.0 / TWO_PI)
            b = -np.log(d / s) / TWO_PI + shift
            b[diag] = -np.log(tnorm) / TWO_PI + shift
        weights = logw[offset] * a + h * b
    # einsum without optimization keeps a sequential reduction over sources,
    # independent of chunk shape
    return np.einsum("jk,kc->jc", weights, tangents, optimize=False)


def _point_rows_numpy(nodes, tangents, points, mode, eps, shift, lo, hi):
    n = nodes.shape[0]
    h = TWO_PI / n
    dx = points[lo:hi, 0][:, None] - nodes[None, :, 0]
    dy = points[lo:hi, 1][:, None] - nodes[None, :, 1]
    d = np.hypot(dx, dy)
    if mode == 0:
        kappa = k0_grid(eps * d) / TWO_PI + shift
    else:
        kappa = -np.log(d) / TWO_PI + shift
    return np.einsum("jk,kc->jc", h * kappa, tangents, optimize=False)


def _velocity_rows(nodes, tangents, mode, eps, shift, logw, lo, hi):
    if ACTIVE_BACKEND == "core":
        out = np.empty((hi - lo, 2))
        logw_arg = np.empty(0) if logw is None else logw
        _core.velocity_rows(nodes, tangents, mode, eps, shift, logw_arg, lo, hi, out)
        return out
    return _velocity_rows_numpy(nodes, tangents, mode, eps, shift, logw, lo, hi)


def _point_rows(nodes, tangents, points, mode, eps, shift, lo, hi):
    if ACTIVE_BACKEND == "core":
        out = np.empty((hi - lo, 2))
        _core.point_velocity_rows(nodes, tangents, points, mode, eps, shift, lo, hi, out)
        return out
    return _point_rows_numpy(nodes, tangents, points, mode, eps, shift, lo, hi)


def _chunked(total: int, workers: int):
    step = -(-total // workers)
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


def velocity_sum(nodes, tangents, mode, eps, shift, logw, workers=1):
    """All-pairs contour velocity sum, rows split across ``workers`` threads."""
    n = nodes.shape[0]
    if workers <= 1 or n < 2 * workers:
        return _velocity_rows(nodes, tangents, mode, eps, shift, logw, 0, n)
    spans = _chunked(n, workers)
    out = np.empty((n, 2))
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        futures = [
            pool.submit(_velocity_rows, nodes, tangents, mode, eps, shift, logw, lo, hi)
            for lo, hi in spans
        ]
        for (lo, hi), fut in zip(spans, futures):
            out[lo:hi] = fut.result()
    return out


def point_velocity_sum(nodes, tangents, points, mode, eps, shift, workers=1):
    """Velocity sums at off-contour points, split across ``workers`` threads."""
    m = points.shape[0]
    if workers <= 1 or m < 2 * workers:
        return _point_rows(nodes, tangents, points, mode, eps, shift, 0, m)
    spans = _chunked(m, workers)
    out = np.empty((m, 2))
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        futures = [
            pool.submit(_point_rows, nodes, tangents, points, mode, eps, shift, lo, hi)
            for lo, hi in spans
        ]
        for (lo, hi), fut in zip(spans, futures):
            out[lo:hi] = fut.result()
    return out
