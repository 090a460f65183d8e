"""Near-critical self-exciting processes: simulation, coupling, and
convergence experiments backed by the C++ core."""

from nearcrit._core import (
    CapacityError,
    InvalidParameter,
    NumericFailure,
    OutOfRangeError,
    build_yamada,
    comonotone_gaussianize,
    criticality_factor,
    default_cell_count,
    estimate_cell_coupling,
    estimate_intensity_convergence,
    fit_rate,
    kernel_moments,
    limit_density,
    malthusian_parameter,
    simulate,
    simulate_limit_coupled,
    simulate_limit_reference,
    solve_resolvent,
    __version__,
)

__all__ = [
    "CapacityError",
    "InvalidParameter",
    "NumericFailure",
    "OutOfRangeError",
    "build_yamada",
    "comonotone_gaussianize",
    "criticality_factor",
    "default_cell_count",
    "estimate_cell_coupling",
    "estimate_intensity_convergence",
    "fit_rate",
    "kernel_moments",
    "limit_density",
    "malthusian_parameter",
    "simulate",
    "simulate_limit_coupled",
    "simulate_limit_reference",
    "solve_resolvent",
    "__version__",
]
