"""Dressed energy of the critical XXZ chain on the real line and in the complex plane."""

from .errors import (
    BoundFalsified,
    BracketError,
    CutProximityError,
    DomainError,
    ParameterError,
    PoleProximityError,
    SolverError,
    StripError,
)
from .kernels import (
    ModelParams,
    bare_energy,
    critical_field,
    eps_inf,
    eps_inf_prime,
    gamma_prime,
    kernel_K,
    kernel_fourier,
    resolvent_inf,
    rho_inf,
    upper_energy,
)
from .fredholm import (
    DensityVector,
    QuadratureGrid,
    ResolventTable,
    build_grid,
    complementary_eval,
    evaluate,
    neumann_oracle,
    resolvent_eval,
    resolvent_table,
    solve_fredholm,
)
from .dressed import DressedSolution, dressed_solution, eps_prime, eps_q_derivative
from .fermi import (
    FermiData,
    boundary_function,
    boundary_derivative,
    bracket_endpoints,
    fermi_derivative,
    solve_fermi,
)
from .complexplane import (
    AsymptoticData,
    BoundReport,
    CurvePoint,
    asymptotic_constant,
    asymptotic_im,
    certify_bounds,
    eval_eps_complex,
    jump_check,
    omega_eval,
    residue_check,
    trace_curve,
)

__version__ = "0.1.0"
