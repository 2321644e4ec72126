"""Quasi-stationary analysis of the absorbed random logistic map.

The chain ``Y_{n+1} = w_n Y_n (1 - Y_n)`` with ``w_n ~ Unif[a, b]`` is killed
as soon as it leaves ``[0, 1]``.  This package discretizes its forward kernel
and transfer operator, solves the associated Perron eigenproblems, certifies
the admissible-pair inequalities and checks the spectral answers against
Monte Carlo simulation of surviving paths.
"""

from .errors import (
    ConvergenceError,
    DegenerateOperatorError,
    DomainError,
    InsufficientSurvivorsError,
    InternalConsistencyError,
    PositivityError,
    PreconditionError,
    SingularTailWarning,
    UnderflowError,
)
from .kernel import (
    LogisticParams,
    alpha_minus,
    alpha_plus,
    apply_forward,
    apply_transfer,
    beta_minus,
    beta_plus,
    kernel_density,
    survival_probability,
    transfer_of_one,
)
from .discretization import (
    Density,
    DiscreteOperator,
    Grid,
    assemble_forward,
    assemble_transfer,
    build_grid,
    duality_residual,
    synthetic_period2_operator,
)
from .spectral import (
    CyclicDecomposition,
    SpectralResult,
    cesaro_profile,
    compute_eta,
    empirical_gap,
    conditioned_time_average,
    leading_eigenpair,
    period_and_classes,
    power_convergence_profile,
    solve,
    yaglom_ratio,
)
from .admissibility import (
    AdmissibilityReport,
    F1,
    F2,
    F3,
    ineq1_margin,
    ineq2_margin,
    is_admissible,
    p_poly,
    p_poly_shifted,
)
from .truncated import SweepEntry, TruncatedDomain, assemble_truncated, epsilon_sweep
from .montecarlo import (
    SimConfig,
    SurvivalStats,
    estimate_survival_rate,
    simulate,
    simulate_thinning,
    yaglom_distance,
)

__version__ = "0.1.0"
