"""Batch command-line front-end.

Subcommands: ``bessel-verify``, ``kernel-verify``, ``evolve``, ``converge``,
``trace``.  Experiment parameters come from a config file (flat ``key=value``
lines or a single JSON object) passed with ``--config``; ``--out`` overrides
the configured output directory.  Every run prints one machine-parsable
status line to stderr::

    qgpatch-status: code=<0|1|2> kind=<...> detail=<...>

and exits 0 on success, 1 on validation failure, 2 on numerical abort.
Every file a run creates is listed in its ``manifest.json``.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import convergence_study, kernel_bound_scan, sphere_mean, write_convergence_report
from .contour import Contour, make_circle, make_ellipse, read_contour_csv
from .dynamics import (
    QUADRATURES,
    EvolutionConfig,
    PatchState,
    evolve,
    trace_flow,
    write_trajectory,
)
from .errors import (
    ConfigError,
    ContourError,
    DomainError,
    EvolutionAborted,
    NearBoundaryError,
    QGPatchError,
    StepFailureError,
    TracerAborted,
    VerificationError,
)
from .kernel import KernelMode
from .special import i0_grid, i1_grid, k0_grid, k1_grid, modified_bessel_k

SUBCOMMANDS = ("bessel-verify", "kernel-verify", "evolve", "converge", "trace")

_MODE_NAMES = ("qgsw", "qgsw-shifted", "euler")

#: every key a config may define; anything else is rejected by name
_KNOWN_KEYS = frozenset({
    "subcommand", "mode", "epsilon", "geometry", "node_count", "dt", "t_end",
    "output_dir", "epsilons", "seeds", "amplitude", "chord_arc_ceiling",
    "diagnostics_stride", "resample_stride", "quadrature", "sample_stride",
    "shifted", "direction", "tracer_dt",
})

_REQUIRED = {
    "bessel-verify": ("output_dir",),
    "kernel-verify": ("output_dir",),
    "evolve": ("mode", "geometry", "node_count", "dt", "t_end", "output_dir"),
    "converge": ("geometry", "node_count", "dt", "t_end", "epsilons", "output_dir"),
    "trace": ("mode", "geometry", "node_count", "dt", "t_end", "seeds", "output_dir"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; ``raw`` echoes the parsed keys for
    the manifest."""

    subcommand: str
    output_dir: str
    mode: KernelMode | None
    geometry: tuple | None
    node_count: int | None
    dt: float | None
    t_end: float | None
    epsilons: tuple | None
    seeds: tuple | None
    amplitude: float
    chord_arc_ceiling: float
    diagnostics_stride: int
    resample_stride: int
    quadrature: str
    sample_stride: int
    shifted: bool
    direction: str
    tracer_dt: float | None
    raw: dict


# ---------------------------------------------------------------------------
# config parsing


def _typed(field: str, value, kind: str, where: str = ""):
    suffix = f" ({where})" if where else ""
    try:
        if kind == "float":
            out = float(value)
            if not np.isfinite(out):
                raise ValueError
            return out
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("true", "yes", "1"):
                return True
            if text in ("false", "no", "0"):
                return False
            raise ValueError
        raise AssertionError(kind)
    except (TypeError, ValueError):
        raise ConfigError(
            f"key {field!r} expects {kind}, got {value!r}{suffix}", field=field
        ) from None


def _parse_geometry(value, where: str) -> tuple:
    if not isinstance(value, str) or ":" not in value:
        raise ConfigError(
            f"geometry must look like circle:R, ellipse:a,b or file:path, got {value!r} ({where})",
            field="geometry",
        )
    shape, _, args = value.partition(":")
    if shape == "circle":
        return ("circle", (_typed("geometry", args, "float", where),))
    if shape == "ellipse":
        parts = args.split(",")
        if len(parts) != 2:
            raise ConfigError(
                f"ellipse geometry needs two axes, got {value!r} ({where})", field="geometry"
            )
        return ("ellipse", tuple(_typed("geometry", p, "float", where) for p in parts))
    if shape == "file":
        if not args:
            raise ConfigError(f"file geometry needs a path ({where})", field="geometry")
        return ("file", (args,))
    raise ConfigError(
        f"unknown geometry kind {shape!r}; expected circle, ellipse or file ({where})",
        field="geometry",
    )


def _parse_epsilons(value, where: str) -> tuple:
    if isinstance(value, str):
        value = [p for p in value.split(",") if p.strip()]
    try:
        items = tuple(_typed("epsilons", v, "float", where) for v in value)
    except TypeError:
        raise ConfigError(
            f"epsilons must be a comma list or JSON array of numbers ({where})",
            field="epsilons",
        ) from None
    if not items:
        raise ConfigError(f"epsilons must be nonempty ({where})", field="epsilons")
    return items


def _parse_seeds(value, where: str) -> tuple:
    if isinstance(value, str):
        pairs = [p for p in value.split(";") if p.strip()]
        out = []
        for pair in pairs:
            comps = pair.split(",")
            if len(comps) != 2:
                raise ConfigError(
                    f"each seed needs two coordinates, got {pair!r} ({where})", field="seeds"
                )
            out.append(tuple(_typed("seeds", c, "float", where) for c in comps))
    else:
        try:
            out = [tuple(_typed("seeds", c, "float", where) for c in pair) for pair in value]
        except TypeError:
            raise ConfigError(
                f"seeds must be 'x,y;x,y' or a JSON array of pairs ({where})", field="seeds"
            ) from None
        if any(len(p) != 2 for p in out):
            raise ConfigError(f"each seed needs two coordinates ({where})", field="seeds")
    if not out:
        raise ConfigError(f"seeds must be nonempty ({where})", field="seeds")
    return tuple(out)


def _key_values(text: str) -> tuple[dict, dict]:
    """Parse key=value lines; returns the mapping and a key -> line-number map."""
    data: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno} is not a key=value pair: {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno} has an empty key")
        if key in data:
            raise ConfigError(f"line {lineno} repeats key {key!r}", field=key)
        data[key] = value
        lines[key] = lineno
    return data, lines


def parse_config(text: str) -> ExperimentConfig:
    """Build a validated ExperimentConfig from key=value lines or one JSON
    object.  Unknown keys and missing subcommand-required keys are rejected
    by name."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be a single object")
        lines = {key: 0 for key in data}
    else:
        data, lines = _key_values(text)

    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", field=unknown[0])

    def where(key):
        return f"line {lines[key]}" if lines.get(key) else "config"

    if "subcommand" not in data:
        raise ConfigError("missing required key 'subcommand'", field="subcommand")
    sub = str(data["subcommand"])
    if sub not in SUBCOMMANDS:
        raise ConfigError(
            f"unknown subcommand {sub!r}; expected one of {', '.join(SUBCOMMANDS)}",
            field="subcommand",
        )
    for key in _REQUIRED[sub]:
        if key not in data:
            raise ConfigError(
                f"missing required key {key!r} for subcommand {sub!r}", field=key
            )

    mode = None
    if "mode" in data:
        name = str(data["mode"])
        if name not in _MODE_NAMES:
            raise ConfigError(
                f"mode must be one of {', '.join(_MODE_NAMES)}, got {name!r} ({where('mode')})",
                field="mode",
            )
        if name == "euler":
            if "epsilon" in data:
                raise ConfigError(
                    f"euler mode takes no epsilon ({where('epsilon')})", field="epsilon"
                )
            mode = KernelMode.euler()
        else:
            if "epsilon" not in data:
                raise ConfigError(
                    f"mode {name!r} requires key 'epsilon'", field="epsilon"
                )
            eps = _typed("epsilon", data["epsilon"], "float", where("epsilon"))
            try:
                mode = KernelMode(name, eps)
            except DomainError as exc:
                raise ConfigError(f"{exc} ({where('epsilon')})", field="epsilon") from None
    elif "epsilon" in data:
        raise ConfigError("key 'epsilon' requires key 'mode'", field="epsilon")

    geometry = _parse_geometry(data["geometry"], where("geometry")) if "geometry" in data else None
    epsilons = _parse_epsilons(data["epsilons"], where("epsilons")) if "epsilons" in data else None
    seeds = _parse_seeds(data["seeds"], where("seeds")) if "seeds" in data else None

    quadrature = str(data.get("quadrature", "auto"))
    if quadrature not in QUADRATURES:
        raise ConfigError(
            f"quadrature must be one of {QUADRATURES}, got {quadrature!r}",
            field="quadrature",
        )
    direction = str(data.get("direction", "forward"))
    if direction not in ("forward", "backward"):
        raise ConfigError(
            f"direction must be forward or backward, got {direction!r}", field="direction"
        )

    return ExperimentConfig(
        subcommand=sub,
        output_dir=str(data.get("output_dir", "out")),
        mode=mode,
        geometry=geometry,
        node_count=_typed("node_count", data["node_count"], "int", where("node_count"))
        if "node_count" in data else None,
        dt=_typed("dt", data["dt"], "float", where("dt")) if "dt" in data else None,
        t_end=_typed("t_end", data["t_end"], "float", where("t_end"))
        if "t_end" in data else None,
        epsilons=epsilons,
        seeds=seeds,
        amplitude=_typed("amplitude", data.get("amplitude", 1.0), "float", where("amplitude")
                         if "amplitude" in data else ""),
        chord_arc_ceiling=_typed("chord_arc_ceiling", data.get("chord_arc_ceiling", 50.0),
                                 "float", ""),
        diagnostics_stride=_typed("diagnostics_stride", data.get("diagnostics_stride", 10),
                                  "int", ""),
        resample_stride=_typed("resample_stride", data.get("resample_stride", 0), "int", ""),
        quadrature=quadrature,
        sample_stride=_typed("sample_stride", data.get("sample_stride", 10), "int", ""),
        shifted=_typed("shifted", data.get("shifted", True), "bool", ""),
        direction=direction,
        tracer_dt=_typed("tracer_dt", data["tracer_dt"], "float", where("tracer_dt"))
        if "tracer_dt" in data else None,
        raw=dict(data),
    )


# ---------------------------------------------------------------------------
# pipelines


def _build_contour(config: ExperimentConfig) -> Contour:
    kind, args = config.geometry
    n = config.node_count
    if kind == "circle":
        return make_circle(args[0], n)
    if kind == "ellipse":
        return make_ellipse(args[0], args[1], n)
    try:
        contour = read_contour_csv(args[0])
    except OSError as exc:
        raise ConfigError(f"cannot read contour file {args[0]!r}: {exc}", field="geometry") from exc
    if contour.node_count != n:
        from .contour import resample

        contour = resample(contour, n)
    return contour


def _write_manifest(outdir: Path, files: list, config: ExperimentConfig,
                    wall_time: float, note: str | None = None) -> None:
    manifest = {
        "version": __version__,
        "config": config.raw,
        "files": files + ["manifest.json"],
        "wall_time_s": wall_time,
    }
    if note is not None:
        manifest["note"] = note
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_bessel_verify(config: ExperimentConfig, outdir: Path, started: float) -> list:
    """Cross-check the scalar evaluator against the vectorized grid routines
    and the two-sided Wronskian-style identity K_{n+1} I_n + K_n I_{n+1} = 1/z."""
    z = np.geomspace(1e-6, 50.0, 200)
    grid = {0: k0_grid(z), 1: k1_grid(z)}
    rows = []
    worst_cross = 0.0
    for n in (0, 1, 2, 3):
        for i, zi in enumerate(z):
            own = modified_bessel_k(n, float(zi))
            if n in grid:
                ref = float(grid[n][i])
                rel = abs(own - ref) / abs(ref)
                worst_cross = max(worst_cross, rel)
            else:
                ref, rel = float("nan"), float("nan")
            rows.append((n, float(zi), own, ref, rel))
    k0v = np.array([modified_bessel_k(0, float(v)) for v in z])
    k1v = np.array([modified_bessel_k(1, float(v)) for v in z])
    wronskian = np.abs((k1v * i0_grid(z) + k0v * i1_grid(z)) * z - 1.0)
    worst_wronskian = float(wronskian.max())
    with open(outdir / "bessel.csv", "w") as fh:
        fh.write("n,z,value,grid_value,rel_diff\n")
        for n, zi, own, ref, rel in rows:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (n, zi, own, ref, rel))
    files = ["bessel.csv"]
    _write_manifest(outdir, files, config, time.perf_counter() - started)
    if worst_cross > 1e-11 or worst_wronskian > 1e-11:
        raise VerificationError(
            f"modified Bessel verification failed: cross-implementation "
            f"deviation {worst_cross:.3g}, identity deviation {worst_wronskian:.3g} "
            f"(threshold 1e-11)"
        )
    return files


def _run_kernel_verify(config: ExperimentConfig, outdir: Path, started: float) -> list:
    """Check the zero circle averages of the oscillatory gradient part and
    the screening-uniformity of the weighted kernel suprema."""
    epsilons = config.epsilons or (0.01, 0.1, 1.0, 10.0)
    mean_rows = []
    worst_mean = 0.0
    for eps in epsilons:
        for radius in (0.5, 2.0):
            for row in (1, 2):
                for col in (1, 2):
                    mean = sphere_mean(("s1", row, col), radius, eps)
                    worst_mean = max(worst_mean, abs(mean))
                    mean_rows.append((eps, radius, row, col, mean))
    scan = kernel_bound_scan(epsilons)
    with open(outdir / "sphere_means.csv", "w") as fh:
        fh.write("epsilon,radius,row,col,mean\n")
        for eps, radius, row, col, mean in mean_rows:
            fh.write("%.17g,%.17g,%d,%d,%.17g\n" % (eps, radius, row, col, mean))
    with open(outdir / "bounds.csv", "w") as fh:
        fh.write("epsilon,kernel_supremum,gradient_supremum,difference_supremum\n")
        for i, eps in enumerate(scan.epsilons):
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % (
                eps, scan.kernel_suprema[i], scan.gradient_suprema[i],
                scan.difference_suprema[i]))
    files = ["sphere_means.csv", "bounds.csv"]
    _write_manifest(outdir, files, config, time.perf_counter() - started)
    spreads = [
        float(arr.max() / arr.min() - 1.0)
        for arr in (scan.kernel_suprema, scan.gradient_suprema, scan.difference_suprema)
    ]
    if worst_mean > 1e-12:
        raise VerificationError(
            f"circle average of an oscillatory gradient entry is {worst_mean:.3g} "
            f"(threshold 1e-12)"
        )
    if max(spreads) > 0.05:
        raise VerificationError(
            f"kernel suprema vary by {max(spreads):.3%} across epsilons (threshold 5%)"
        )
    return files


def _run_evolve(config: ExperimentConfig, outdir: Path, started: float) -> list:
    state = PatchState(_build_contour(config), config.mode, amplitude=config.amplitude)
    cfg = EvolutionConfig(
        dt=config.dt, t_end=config.t_end, node_count=config.node_count,
        chord_arc_ceiling=config.chord_arc_ceiling,
        diagnostics_stride=config.diagnostics_stride,
        resample_stride=config.resample_stride, quadrature=config.quadrature,
    )
    try:
        trajectory = evolve(state, cfg)
    except EvolutionAborted as exc:
        files = write_trajectory(exc.trajectory, outdir, config=config.raw,
                                 wall_time=time.perf_counter() - started)
        exc.partial_files = files
        raise
    return write_trajectory(trajectory, outdir, config=config.raw,
                            wall_time=time.perf_counter() - started)


def _run_converge(config: ExperimentConfig, outdir: Path, started: float) -> list:
    initial = _build_contour(config)
    report = convergence_study(
        initial, config.epsilons, config.t_end, config.dt, config.sample_stride,
        shifted=config.shifted, chord_arc_ceiling=config.chord_arc_ceiling,
    )
    files = write_convergence_report(report, outdir, config=config.raw)
    _write_manifest(outdir, files, config, time.perf_counter() - started)
    return files


def _run_trace(config: ExperimentConfig, outdir: Path, started: float) -> list:
    state = PatchState(_build_contour(config), config.mode, amplitude=config.amplitude)
    cfg = EvolutionConfig(
        dt=config.dt, t_end=config.t_end, node_count=config.node_count,
        chord_arc_ceiling=config.chord_arc_ceiling,
        diagnostics_stride=config.diagnostics_stride,
        resample_stride=config.resample_stride, quadrature=config.quadrature,
    )
    trajectory = evolve(state, cfg)
    paths = trace_flow(trajectory, config.seeds, config.direction, dt=config.tracer_dt)
    with open(outdir / "tracers.csv", "w") as fh:
        fh.write("t,seed,x1,x2\n")
        for s, t in enumerate(paths.times):
            for m in range(len(paths)):
                fh.write("%.17g,%d,%.17g,%.17g\n" % (
                    t, m, paths.positions[s, m, 0], paths.positions[s, m, 1]))
    files = ["tracers.csv"]
    _write_manifest(outdir, files, config, time.perf_counter() - started)
    return files


_PIPELINES = {
    "bessel-verify": _run_bessel_verify,
    "kernel-verify": _run_kernel_verify,
    "evolve": _run_evolve,
    "converge": _run_converge,
    "trace": _run_trace,
}

_ABORT_KINDS = {
    EvolutionAborted: "evolution-aborted",
    StepFailureError: "step-failure",
    TracerAborted: "tracer-aborted",
    NearBoundaryError: "near-boundary",
    VerificationError: "verification-failed",
}


def _status(code: int, kind: str, detail: str) -> None:
    detail = " ".join(str(detail).split())
    print(f"qgpatch-status: code={code} kind={kind} detail={detail}", file=sys.stderr)


def run(config: ExperimentConfig, quiet: bool = False) -> int:
    """Execute one experiment; returns the process exit code (0/1/2)."""
    started = time.perf_counter()
    try:
        outdir = Path(config.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        files = _PIPELINES[config.subcommand](config, outdir, started)
    except (ConfigError, DomainError, ContourError) as exc:
        _status(1, "validation", str(exc))
        return 1
    except tuple(_ABORT_KINDS) as exc:
        _status(2, _ABORT_KINDS[type(exc)], str(exc))
        return 2
    except QGPatchError as exc:
        _status(2, "numerical-abort", str(exc))
        return 2
    if "manifest.json" not in files:
        files = files + ["manifest.json"]
    _status(0, "ok", f"{config.subcommand} wrote {len(files)} files to {outdir}")
    if not quiet:
        print(f"{config.subcommand}: wrote {len(files)} files to {outdir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qgpatch",
        description="Contour-dynamics experiments for screened and Euler vortex patches.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="PATH",
                        help="experiment config: key=value lines or a JSON object")
    parser.add_argument("--out", metavar="DIR", help="override the configured output_dir")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument("--version", action="version", version=f"qgpatch {__version__}")
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            text = Path(args.config).read_text()
        else:
            text = f"subcommand={args.subcommand}\n"
        config = parse_config(text)
        if config.subcommand != args.subcommand:
            raise ConfigError(
                f"config names subcommand {config.subcommand!r} but the command "
                f"line says {args.subcommand!r}", field="subcommand",
            )
        if args.out is not None:
            from dataclasses import replace

            config = replace(config, output_dir=args.out,
                             raw={**config.raw, "output_dir": args.out})
    except OSError as exc:
        _status(1, "validation", f"cannot read config: {exc}")
        return 1
    except (ConfigError, DomainError) as exc:
        _status(1, "validation", str(exc))
        return 1
    return run(config, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
