"""Numerical laboratory for Green functions of nonlocal fractional-order
operators on bounded domains: jump-kernel catalog with sampled condition
certificates, a symmetric lattice discretization of the Dirichlet form with
killing, regularized Green solves, theorem-level analysis (power-law decay,
weak-L^p quasinorms, Harnack ratios, fractional Sobolev seminorms), and
closed-form unit-ball oracles that stay robust as the order approaches 2.
"""

from .analysis import (
    BoundReport,
    PowerLawFit,
    ProblemSetup,
    RobustnessSweep,
    extract_constants,
    fit_near_diagonal,
    gagliardo_seminorm,
    harnack_chain_bound,
    local_boundedness_constant,
    multi_annulus_harnack,
    oracle_field,
    robustness_sweep,
    solve_problem,
)
from .errors import ConfigurationError, NonConvergenceError, NumericsError
from .kernels import (
    ConditionReport,
    KernelInstance,
    KernelSpec,
    SamplingPlan,
    check_condition,
    make_kernel,
    stable_constant,
    tail_mass,
)
from .lattice import (
    Ball,
    Box,
    GridDomain,
    NonlocalOperator,
    PredicateShape,
    StencilWeights,
    apply_operator,
    assemble_operator,
    build_grid,
    discrete_comparability,
    quadrature_weights,
)
from .oracle import (
    BallGreenParams,
    near_diagonal_constant,
    newtonian_ball_green,
    stable_ball_green,
)
from .solve import GreenField, SolveConfig, green_pair, regularized_rhs, solve_green

__version__ = "0.1.0"
