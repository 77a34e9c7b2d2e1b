"""Contour dynamics for screened (quasi-geostrophic shallow-water) and Euler
vortex patches: modified-Bessel special functions, velocity kernels, closed
contours with spectral geometry, boundary evolution, tracer flow maps, and
quantitative diagnostics."""

__version__ = "0.1.0"

from .analysis import (
    ConvergenceReport,
    IdentityCheck,
    KernelBoundScan,
    SampledField,
    bessel_integral_identity_check,
    convergence_study,
    holder_seminorm,
    kernel_bound_scan,
    log_lipschitz_constant,
    log_lipschitz_modulus,
    sphere_mean,
)
from .contour import (
    Contour,
    area,
    centroid,
    chord_arc_constant,
    contour_distance,
    make_circle,
    make_ellipse,
    perimeter,
    read_contour_csv,
    resample,
    tangent,
    write_contour_csv,
)
from .dynamics import (
    DiagnosticsRecord,
    EvolutionConfig,
    PatchState,
    TracerPaths,
    Trajectory,
    cde_velocity,
    evolve,
    point_velocity,
    rk4_step,
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
    UnsupportedRangeError,
    VerificationError,
)
from .kernel import (
    GradDecomposition,
    KernelMode,
    biot_savart_kernel,
    contour_kernel_scalar,
    gradient_decomposition,
    kernel_gradient,
)
from .special import (
    BesselValue,
    EvalStatus,
    SmoothKernelParts,
    bessel_k_derivative,
    kernel_series_parts,
    modified_bessel_i,
    modified_bessel_k,
    modified_bessel_k_checked,
)

from ._backend import ACTIVE_BACKEND

__all__ = [
    "__version__",
    "ACTIVE_BACKEND",
    # special
    "BesselValue", "EvalStatus", "SmoothKernelParts", "bessel_k_derivative",
    "kernel_series_parts", "modified_bessel_i", "modified_bessel_k",
    "modified_bessel_k_checked",
    # kernel
    "GradDecomposition", "KernelMode", "biot_savart_kernel",
    "contour_kernel_scalar", "gradient_decomposition", "kernel_gradient",
    # contour
    "Contour", "area", "centroid", "chord_arc_constant", "contour_distance",
    "make_circle", "make_ellipse", "perimeter", "read_contour_csv", "resample",
    "tangent", "write_contour_csv",
    # dynamics
    "DiagnosticsRecord", "EvolutionConfig", "PatchState", "TracerPaths",
    "Trajectory", "cde_velocity", "evolve", "point_velocity", "rk4_step",
    "trace_flow", "write_trajectory",
    # analysis
    "ConvergenceReport", "IdentityCheck", "KernelBoundScan", "SampledField",
    "bessel_integral_identity_check", "convergence_study", "holder_seminorm",
    "kernel_bound_scan", "log_lipschitz_constant", "log_lipschitz_modulus",
    "sphere_mean",
    # errors
    "ConfigError", "ContourError", "DomainError", "EvolutionAborted",
    "NearBoundaryError", "QGPatchError", "StepFailureError", "TracerAborted",
    "UnsupportedRangeError", "VerificationError",
]
