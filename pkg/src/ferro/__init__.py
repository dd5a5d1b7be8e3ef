"""Numerical laboratory for a two-dimensional ferronematic model.

A nematic order tensor Q (traceless symmetric 2x2, handled through the
embedding q = sqrt(2) (Q11, Q12)) couples to a magnetization field M through
a scaled Landau potential.  The package relaxes the pair (Q, M) to critical
points of the energy on a lattice, locates the singular structures that
emerge (half-integer point defects of Q, jump lines of M), and computes the
limiting variational objects (minimal connections, renormalized energy, core
energy) so the two routes can be compared quantitatively.
"""

__version__ = "0.1.0"

from .errors import (
    FerroError,
    InvalidInputError,
    DegenerateTensorError,
    DegreeUndefinedError,
    ResolutionError,
    FrameUndefinedError,
    NoProjectionError,
    NumericError,
    InfeasibleGeometryError,
    ConfigError,
)
from .qtensor import (
    q_from_tensor,
    tensor_from_q,
    polar_decompose,
    director_tensor,
    LoopSample,
    circle_loop,
    loop_degree,
    u_frame,
)
from .potential import (
    CouplingParams,
    PotentialConstants,
    compute_constants,
    kappa_star,
    kappa_eps,
    s_star,
    c_beta,
    f_eps,
    wells,
    project_well,
)
from .grid import (
    Domain,
    DomainGrid,
    BoundaryData,
    build_grid,
    make_boundary_data,
    laplacian,
    gradient,
    poisson_solve,
)
from .solver import SolverConfig, SolveState, relax, initialize, energy, el_residual
from .diagnostics import (
    Defect,
    JumpSet,
    detect_defects,
    jump_set,
    energy_densities,
    pohozaev_residual,
    zeta_profile,
    nu_mass_vs_length,
    line_tension,
)
from .geometry import (
    ConnectionProblem,
    Connection,
    minimal_connection,
    validate_connection,
    canonical_map,
    renormalized_energy,
    renorm_gradient,
    w_beta_omega,
    optimize_positions,
    core_energy,
    hausdorff_distance,
)

__all__ = [
    "__version__",
    "FerroError",
    "InvalidInputError",
    "DegenerateTensorError",
    "DegreeUndefinedError",
    "ResolutionError",
    "FrameUndefinedError",
    "NoProjectionError",
    "NumericError",
    "InfeasibleGeometryError",
    "ConfigError",
    "q_from_tensor",
    "tensor_from_q",
    "polar_decompose",
    "director_tensor",
    "LoopSample",
    "circle_loop",
    "loop_degree",
    "u_frame",
    "CouplingParams",
    "PotentialConstants",
    "compute_constants",
    "kappa_star",
    "kappa_eps",
    "s_star",
    "c_beta",
    "f_eps",
    "wells",
    "project_well",
    "Domain",
    "DomainGrid",
    "BoundaryData",
    "build_grid",
    "make_boundary_data",
    "laplacian",
    "gradient",
    "poisson_solve",
    "SolverConfig",
    "SolveState",
    "relax",
    "initialize",
    "energy",
    "el_residual",
    "Defect",
    "JumpSet",
    "detect_defects",
    "jump_set",
    "energy_densities",
    "pohozaev_residual",
    "zeta_profile",
    "nu_mass_vs_length",
    "line_tension",
    "ConnectionProblem",
    "Connection",
    "minimal_connection",
    "validate_connection",
    "canonical_map",
    "renormalized_energy",
    "renorm_gradient",
    "w_beta_omega",
    "optimize_positions",
    "core_energy",
    "hausdorff_distance",
]
