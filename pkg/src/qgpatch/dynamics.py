"""Patch evolution by contour dynamics.

The boundary of a uniform-vorticity patch moves with the velocity the patch
induces on itself, which reduces to a closed boundary integral

    dz/dt (a) = amplitude * integral of kappa(|z(a) - z(a')|) z_alpha(a') da'

over the parametrizing circle, with ``kappa`` the scalar contour kernel of the
active :class:`~qgpatch.kernel.KernelMode`.  This module discretizes that
integral on the contour's uniform grid, steps it in time with classical RK4,
evaluates the induced velocity at points off the contour, and integrates
passive tracers through stored trajectories.

Sign convention: a counterclockwise contour with amplitude +1 rotates
counterclockwise (positive tangential boundary velocity); the unit-circle
steady state fixes the global sign of the integrand.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .contour import (
    _MIN_NODES,
    Contour,
    _spectral_derivative,
    area,
    chord_arc_constant,
    perimeter,
    resample,
    write_contour_csv,
)
from .errors import (
    ConfigError,
    ContourError,
    DomainError,
    EvolutionAborted,
    NearBoundaryError,
    StepFailureError,
    TracerAborted,
    UnsupportedRangeError,
)
from .kernel import KernelMode

QUADRATURES = ("auto", "split", "punctured")

#: The log-split quadrature multiplies exact log weights by a smooth factor
#: that grows like exp(eps * chord); past this value of eps * diameter the
#: amplified weight cancellation costs more accuracy than the split gains,
#: and "auto" falls back to the punctured trapezoid rule.
SPLIT_STABILITY_LIMIT = 16.0


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class PatchState:
    """Immutable snapshot of a patch: boundary, time, vorticity amplitude, mode."""

    contour: Contour
    mode: KernelMode
    time: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not isinstance(self.contour, Contour):
            raise DomainError(f"contour must be a Contour, got {type(self.contour).__name__}")
        if not isinstance(self.mode, KernelMode):
            raise DomainError(f"mode must be a KernelMode, got {type(self.mode).__name__}")
        if not np.isfinite(self.time):
            raise DomainError(f"time must be finite, got {self.time}")
        if not np.isfinite(self.amplitude):
            raise DomainError(f"amplitude must be finite, got {self.amplitude}")


@dataclass(frozen=True)
class EvolutionConfig:
    """Evolution run parameters.

    ``t_end`` must be an integer number of ``dt`` steps so that snapshot
    spacing is uniform.  ``resample_stride = 0`` disables periodic spectral
    resampling.  ``quadrature`` selects the contour-integral rule: "split"
    (spectral log-split), "punctured" (trapezoid skipping the singular node),
    or "auto" (split whenever it is stable, see SPLIT_STABILITY_LIMIT).
    """

    dt: float
    t_end: float
    node_count: int
    chord_arc_ceiling: float = 50.0
    diagnostics_stride: int = 10
    resample_stride: int = 0
    quadrature: str = "auto"

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}", field="dt")
        if not (self.t_end > 0 and np.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be positive, got {self.t_end}", field="t_end")
        if self.dt > self.t_end:
            raise ConfigError(
                f"dt = {self.dt} exceeds t_end = {self.t_end}", field="dt"
            )
        if self.node_count < _MIN_NODES or self.node_count % 2:
            raise ConfigError(
                f"node_count must be even and >= {_MIN_NODES}, got {self.node_count}",
                field="node_count",
            )
        if not self.chord_arc_ceiling > 1.0:
            raise ConfigError(
                f"chord_arc_ceiling must exceed 1, got {self.chord_arc_ceiling}",
                field="chord_arc_ceiling",
            )
        if self.diagnostics_stride < 1:
            raise ConfigError(
                f"diagnostics_stride must be >= 1, got {self.diagnostics_stride}",
                field="diagnostics_stride",
            )
        if self.resample_stride < 0:
            raise ConfigError(
                f"resample_stride must be >= 0, got {self.resample_stride}",
                field="resample_stride",
            )
        if self.quadrature not in QUADRATURES:
            raise ConfigError(
                f"quadrature must be one of {QUADRATURES}, got {self.quadrature!r}",
                field="quadrature",
            )

    def step_count(self) -> int:
        steps = int(round(self.t_end / self.dt))
        if steps < 1 or not np.isclose(steps * self.dt, self.t_end, rtol=1e-9, atol=1e-12):
            raise ConfigError(
                f"t_end = {self.t_end} is not an integer number of dt = {self.dt} steps",
                field="t_end",
            )
        return steps


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar health indicators of one snapshot."""

    time: float
    area: float
    perimeter: float
    chord_arc: float
    max_speed: float

    def __post_init__(self):
        if not self.area > 0:
            raise DomainError(f"diagnostic area must be positive, got {self.area}")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered snapshots of an evolution plus matching diagnostics."""

    snapshots: tuple
    diagnostics: tuple

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        object.__setattr__(self, "diagnostics", tuple(self.diagnostics))
        if not self.snapshots:
            raise DomainError("trajectory needs at least one snapshot")
        times = self.times
        if np.any(np.diff(times) <= 0):
            raise DomainError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self) -> PatchState:
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# quadrature plumbing


@functools.lru_cache(maxsize=16)
def _log_weights(n: int) -> np.ndarray:
    return _backend.log_quadrature_weights(n)


def _mode_code(mode: KernelMode) -> int:
    return 1 if mode.family == "euler" else 0


def _split_scale(nodes: np.ndarray, mode: KernelMode) -> float:
    """eps times (an upper bound on) the contour diameter."""
    if mode.family == "euler":
        return 0.0
    span = nodes.max(axis=0) - nodes.min(axis=0)
    return mode.epsilon * float(np.hypot(span[0], span[1]))


def _resolve_quadrature(nodes: np.ndarray, mode: KernelMode, quadrature: str) -> str:
    if quadrature not in QUADRATURES:
        raise ConfigError(
            f"quadrature must be one of {QUADRATURES}, got {quadrature!r}",
            field="quadrature",
        )
    if quadrature == "punctured":
        return "punctured"
    scale = _split_scale(nodes, mode)
    if scale <= SPLIT_STABILITY_LIMIT:
        return "split"
    if quadrature == "split":
        raise UnsupportedRangeError(
            f"log-split quadrature is unstable for epsilon * diameter = {scale:.3g} "
            f"> {SPLIT_STABILITY_LIMIT}; use quadrature='punctured'"
        )
    return "punctured"


def _node_velocity(nodes: np.ndarray, mode: KernelMode, amplitude: float,
                   scheme: str) -> np.ndarray:
    """Velocity at the nodes of a (possibly mid-step) node array."""
    if not np.isfinite(nodes).all():
        raise ContourError("contour nodes are not finite")
    if amplitude == 0.0:
        return np.zeros_like(nodes)
    tangents = _spectral_derivative(nodes)
    logw = _log_weights(nodes.shape[0]) if scheme == "split" else None
    v = _backend.velocity_sum(
        nodes, tangents, _mode_code(mode), mode.epsilon, mode.scalar_shift,
        logw, workers=_backend.worker_count(),
    )
    if not np.isfinite(v).all():
        raise ContourError("singular configuration: coincident or nearly "
                           "coincident contour nodes")
    return amplitude * v


# ---------------------------------------------------------------------------
# operations


def cde_velocity(state: PatchState, quadrature: str = "auto") -> np.ndarray:
    """Boundary velocity at every contour node, shape (N, 2).

    Sources are summed in fixed index order per target node, so the result is
    bit-identical for any worker count or backend chunking.
    """
    nodes = state.contour.nodes
    scheme = _resolve_quadrature(nodes, state.mode, quadrature)
    return _node_velocity(nodes, state.mode, state.amplitude, scheme)


def _max_node_spacing(nodes: np.ndarray) -> float:
    gaps = np.diff(nodes, axis=0, append=nodes[:1])
    return float(np.hypot(gaps[:, 0], gaps[:, 1]).max())


def _guard_points(points: np.ndarray, nodes: np.ndarray, time: float) -> None:
    d = np.hypot(points[:, None, 0] - nodes[None, :, 0],
                 points[:, None, 1] - nodes[None, :, 1])
    dmin = d.min(axis=1)
    band = 2.0 * _max_node_spacing(nodes)
    bad = dmin < band
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NearBoundaryError(
            f"point {tuple(points[i])} is {dmin[i]:.4g} from the contour at "
            f"t = {time:g}, inside the refusal band 2 * max node spacing = {band:.4g}",
            point=points[i].copy(),
            distance=float(dmin[i]),
        )


def _points_velocity(nodes: np.ndarray, tangents: np.ndarray, points: np.ndarray,
                     mode: KernelMode, amplitude: float) -> np.ndarray:
    if amplitude == 0.0:
        return np.zeros_like(points)
    v = _backend.point_velocity_sum(
        nodes, tangents, points, _mode_code(mode), mode.epsilon,
        mode.scalar_shift, workers=_backend.worker_count(),
    )
    return amplitude * v


def point_velocity(state: PatchState, x) -> np.ndarray:
    """Induced velocity at a point off the contour, shape (2,).

    Points closer to the contour than twice the maximum node spacing are
    refused (NearBoundaryError): the plain trapezoid rule used here loses
    accuracy as the kernel singularity approaches the quadrature grid.
    """
    point = np.asarray(x, dtype=float)
    if point.shape != (2,):
        raise DomainError(f"point must have shape (2,), got {point.shape}")
    if not np.isfinite(point).all():
        raise DomainError("point must be finite")
    nodes = state.contour.nodes
    _guard_points(point[None, :], nodes, state.time)
    tangents = _spectral_derivative(nodes)
    return _points_velocity(nodes, tangents, point[None, :], state.mode,
                            state.amplitude)[0]


def rk4_step(state: PatchState, dt: float, quadrature: str = "auto") -> PatchState:
    """One classical 4-stage explicit step; each stage re-evaluates the
    contour integral on the staged nodes."""
    if not (dt > 0 and np.isfinite(dt)):
        raise DomainError(f"dt must be positive, got {dt}")
    nodes = state.contour.nodes
    scheme = _resolve_quadrature(nodes, state.mode, quadrature)

    def stage(pts, index):
        try:
            return _node_velocity(pts, state.mode, state.amplitude, scheme)
        except ContourError as exc:
            raise StepFailureError(
                f"stage {index} of the RK4 step failed: {exc}", stage=index
            ) from exc

    k1 = stage(nodes, 1)
    k2 = stage(nodes + 0.5 * dt * k1, 2)
    k3 = stage(nodes + 0.5 * dt * k2, 3)
    k4 = stage(nodes + dt * k3, 4)
    new_nodes = nodes + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return replace(state, contour=Contour(new_nodes), time=state.time + dt)


def _diagnose(state: PatchState, quadrature: str) -> DiagnosticsRecord:
    speeds = np.hypot(*cde_velocity(state, quadrature).T)
    return DiagnosticsRecord(
        time=state.time,
        area=area(state.contour),
        perimeter=perimeter(state.contour),
        chord_arc=chord_arc_constant(state.contour),
        max_speed=float(speeds.max()),
    )


def evolve(state: PatchState, cfg: EvolutionConfig) -> Trajectory:
    """March the patch to ``cfg.t_end``; snapshots and diagnostics are stored
    at step 0, every ``diagnostics_stride`` steps, and the final step.

    Raises EvolutionAborted (carrying the partial Trajectory) as soon as a
    recorded chord-arc constant exceeds ``cfg.chord_arc_ceiling``.
    """
    steps = cfg.step_count()
    if state.contour.node_count != cfg.node_count:
        state = replace(state, contour=resample(state.contour, cfg.node_count))
    snapshots = [state]
    diagnostics = [_diagnose(state, cfg.quadrature)]
    if diagnostics[0].chord_arc > cfg.chord_arc_ceiling:
        raise EvolutionAborted(
            f"chord-arc constant {diagnostics[0].chord_arc:.4g} exceeds the "
            f"ceiling {cfg.chord_arc_ceiling:.4g} at t = {state.time:g}",
            trajectory=Trajectory(tuple(snapshots), tuple(diagnostics)),
            time=state.time,
            reason="chord-arc ceiling exceeded",
        )
    for step in range(1, steps + 1):
        state = rk4_step(state, cfg.dt, cfg.quadrature)
        if cfg.resample_stride and step % cfg.resample_stride == 0 and step < steps:
            state = replace(state, contour=resample(state.contour, cfg.node_count))
        if step % cfg.diagnostics_stride == 0 or step == steps:
            record = _diagnose(state, cfg.quadrature)
            snapshots.append(state)
            diagnostics.append(record)
            if record.chord_arc > cfg.chord_arc_ceiling:
                raise EvolutionAborted(
                    f"chord-arc constant {record.chord_arc:.4g} exceeds the "
                    f"ceiling {cfg.chord_arc_ceiling:.4g} at t = {state.time:g}",
                    trajectory=Trajectory(tuple(snapshots), tuple(diagnostics)),
                    time=state.time,
                    reason="chord-arc ceiling exceeded",
                )
    return Trajectory(tuple(snapshots), tuple(diagnostics))


# ---------------------------------------------------------------------------
# tracers


@dataclass(frozen=True)
class TracerPaths:
    """Tracer trajectories: ``positions[s, m]`` is seed ``m`` at ``times[s]``.

    Indexing the object by seed returns that seed's (S, 2) path, so it
    behaves as a sequence of per-seed paths.
    """

    times: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return self.positions.shape[1]

    def __getitem__(self, seed_index: int) -> np.ndarray:
        return self.positions[:, seed_index]


def _frame_stack(trajectory: Trajectory):
    states = trajectory.snapshots
    counts = {s.contour.node_count for s in states}
    if len(counts) != 1:
        raise ContourError("tracer integration needs a uniform node count "
                           "across snapshots")
    modes = {s.mode for s in states}
    amps = {s.amplitude for s in states}
    if len(modes) != 1 or len(amps) != 1:
        raise DomainError("tracer integration needs a uniform mode and "
                          "amplitude across snapshots")
    times = trajectory.times
    nodes = np.stack([s.contour.nodes for s in states])
    tangents = np.stack([_spectral_derivative(s.contour.nodes) for s in states])
    return times, nodes, tangents, states[0].mode, states[0].amplitude


def trace_flow(trajectory: Trajectory, seeds, direction: str,
               dt: float | None = None) -> TracerPaths:
    """Integrate passive tracers through a stored trajectory with RK4,
    blending boundary snapshots linearly in time between stored frames.

    ``direction="forward"`` integrates dX/dt = v(X, t) from the first to the
    last snapshot time; ``"backward"`` integrates the time-reversed frame
    sequence with negated velocity, producing the inverse flow map.  ``dt``
    defaults to the smallest snapshot spacing (or the full span for a
    single-snapshot steady trajectory).
    """
    if direction not in ("forward", "backward"):
        raise DomainError(f"direction must be 'forward' or 'backward', got {direction!r}")
    pts = np.atleast_2d(np.asarray(seeds, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise DomainError(f"seeds must have shape (M, 2), got {np.shape(seeds)}")
    if not np.isfinite(pts).all():
        raise DomainError("seeds must be finite")

    times, frames, frame_tangents, mode, amplitude = _frame_stack(trajectory)
    t0, t1 = float(times[0]), float(times[-1])
    span = t1 - t0
    if span <= 0:
        raise DomainError("tracer integration needs a trajectory spanning "
                          "positive time")
    if dt is None:
        dt = float(np.diff(times).min())
    if not (dt > 0 and np.isfinite(dt)):
        raise DomainError(f"dt must be positive, got {dt}")
    dt = min(dt, span)
    sign = 1.0 if direction == "forward" else -1.0

    def frame_at(t):
        # physical time of the frame blend; for backward runs t decreases
        if len(times) == 1:
            return frames[0], frame_tangents[0]
        i = int(np.searchsorted(times, t, side="right") - 1)
        i = min(max(i, 0), len(times) - 2)
        w = (t - times[i]) / (times[i + 1] - times[i])
        w = min(max(w, 0.0), 1.0)
        return ((1.0 - w) * frames[i] + w * frames[i + 1],
                (1.0 - w) * frame_tangents[i] + w * frame_tangents[i + 1])

    def rhs(t, positions):
        nodes, tangents = frame_at(t)
        _guard_points(positions, nodes, t)
        return sign * _points_velocity(nodes, tangents, positions, mode, amplitude)

    start = t1 if direction == "backward" else t0
    t = start
    remaining = span
    out_times = [t]
    out_positions = [pts.copy()]
    x = pts.copy()
    while remaining > 1e-12 * max(1.0, span):
        step = min(dt, remaining)
        try:
            k1 = rhs(t, x)
            k2 = rhs(t + sign * step / 2.0, x + (step / 2.0) * k1)
            k3 = rhs(t + sign * step / 2.0, x + (step / 2.0) * k2)
            k4 = rhs(t + sign * step, x + step * k3)
        except NearBoundaryError as exc:
            raise TracerAborted(
                f"tracer entered the near-boundary refusal band at t = {t:g}: {exc}",
                positions=x.copy(),
                time=t,
            ) from exc
        x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + sign * step
        remaining -= step
        out_times.append(t)
        out_positions.append(x.copy())
    return TracerPaths(times=np.array(out_times), positions=np.stack(out_positions))


# ---------------------------------------------------------------------------
# export


def write_trajectory(trajectory: Trajectory, directory, config=None,
                     wall_time: float | None = None) -> list:
    """Write one contour CSV per snapshot, diagnostics.csv, and manifest.json.

    Returns the list of file names written (manifest last).  The manifest
    echoes ``config`` (any JSON-serializable mapping) and the library version.
    """
    from pathlib import Path

    from . import __version__

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, snap in enumerate(trajectory.snapshots):
        name = f"snapshot_{i:06d}.csv"
        write_contour_csv(snap.contour, out / name)
        files.append(name)
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("t,area,perimeter,chord_arc,max_speed\n")
        for rec in trajectory.diagnostics:
            fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                rec.time, rec.area, rec.perimeter, rec.chord_arc, rec.max_speed))
    files.append("diagnostics.csv")
    manifest = {
        "version": __version__,
        "files": files + ["manifest.json"],
        "config": dict(config) if config is not None else None,
        "wall_time_s": wall_time,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append("manifest.json")
    return files
