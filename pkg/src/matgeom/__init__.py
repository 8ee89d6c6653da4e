"""Laplacian, Poisson and heat equations on the matrix algebra M_n."""

from .algebra import (
    DimensionMismatchError,
    DomainError,
    HermitianDecomposition,
    NotHermitianError,
    NotPositiveError,
    eigenvalue_l1_gap,
    eta,
    fannes_bound,
    hermitian_eig,
    hs_inner,
    hs_norm,
    matrix_function,
    mean_part,
    random_hermitian,
    random_pd,
    read_matrix,
    trace_distance,
    von_neumann_entropy,
    write_matrix,
)
from .flows import (
    FlowTrajectory,
    StabilityReport,
    entropy_monotonicity_check,
    flow_diagnostics,
    heat_flow_exact,
    heat_flow_rk4,
    log_det_monotonicity_check,
    log_laplacian_flow,
    stability_experiment,
)
from .geometry import (
    GeometryContext,
    Superoperator,
    assemble_superoperator,
    delta1,
    delta2,
    dirichlet_power_form,
    laplacian_apply,
    make_context,
)
from .poisson import NotSolvableError, PoissonSolution, is_solvable, poisson_roundtrip_check, solve_poisson
from .properties import PropertyReport, check_properties
from .spectral import Spectrum, heat_semigroup_apply, heat_trace, lambda1, spectrum

__version__ = "0.1.0"
