"""Age-of-infection epidemic toolkit.

Forward simulation of the renewal-equation epidemic model from one or
several infected cohorts, reconstruction of the daily reproduction
number R0(a) from incidence, a bridge from reported-case data to model
inputs, and a stochastic individual-based simulator for validating both
directions.
"""

from .errors import ConfigError, DataError, NumericsError
from .forward import (
    CohortSet,
    EpidemicTrajectory,
    GenerationDecomposition,
    IncidenceSeries,
    convolve,
    day_binned,
    dirac_approx_flux,
    generation_decomposition,
    lambda_of_t,
    solve_continuous,
    solve_discrete,
)
from .inverse import (
    ReconstructionResult,
    analytic_exponential_decay,
    analytic_latency,
    nonidentifiable_family,
    reconstruct_continuous,
    reconstruct_discrete,
    reconstruct_gamma,
)
from .kernel import (
    BiphasicBeta,
    ConstantBeta,
    InfectionKernel,
    QuadratureGrid,
    ShiftedGammaBeta,
    builtin_kernel_example1,
    builtin_kernel_example2,
    daily_r0,
    default_grid,
    kernel_from_config,
    kernel_to_config,
    r0_total,
    resolve_kernel,
    tau_from_r0,
)
from .data_bridge import (
    ClusterRecord,
    CumulativeSeries,
    align_cluster,
    incidence_from_cumulative,
    regularize,
)
from .ibm import (
    BatchSummary,
    IbmConfig,
    IbmRunResult,
    SecondaryCaseStats,
    run_batch,
    run_ibm,
    run_many,
    secondary_case_stats,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "DataError",
    "NumericsError",
    "InfectionKernel",
    "QuadratureGrid",
    "ShiftedGammaBeta",
    "BiphasicBeta",
    "ConstantBeta",
    "builtin_kernel_example1",
    "builtin_kernel_example2",
    "resolve_kernel",
    "kernel_to_config",
    "kernel_from_config",
    "r0_total",
    "tau_from_r0",
    "daily_r0",
    "default_grid",
    "CohortSet",
    "IncidenceSeries",
    "EpidemicTrajectory",
    "GenerationDecomposition",
    "solve_continuous",
    "solve_discrete",
    "lambda_of_t",
    "convolve",
    "generation_decomposition",
    "dirac_approx_flux",
    "day_binned",
    "ReconstructionResult",
    "reconstruct_continuous",
    "reconstruct_discrete",
    "reconstruct_gamma",
    "analytic_exponential_decay",
    "analytic_latency",
    "nonidentifiable_family",
    "CumulativeSeries",
    "ClusterRecord",
    "incidence_from_cumulative",
    "regularize",
    "align_cluster",
    "IbmConfig",
    "IbmRunResult",
    "BatchSummary",
    "SecondaryCaseStats",
    "run_ibm",
    "run_many",
    "run_batch",
    "secondary_case_stats",
]
