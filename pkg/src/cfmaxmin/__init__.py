"""Max-min fair uplink power control and receive combining for cell-free massive MIMO."""

from .apg import (
    ApgConfig,
    ApgTrace,
    PowerState,
    apg_solve,
    gradient,
    inv_sinr,
    momentum_next,
    project,
    smoothed_objective,
    softmax_weights,
)
from .network import (
    BOLTZMANN_J_PER_K,
    NOISE_TEMPERATURE_K,
    EstimationStats,
    LargeScaleModel,
    PilotBook,
    Realization,
    SimParams,
    assign_pilots,
    estimation_stats,
    generate_geometry,
    large_scale_fading,
    load_model_csv,
    noise_power_watt,
    pairwise_distances,
    path_loss_db,
    realize,
    save_model_csv,
)
from .oracle import OracleResult, bisection_solve, feasibility
from .receiver import OpCounter, optimal_weights, solve_b_system
from .sinr import (
    DegenerateBeamError,
    ReducedCoeffs,
    SinrTerms,
    build_sinr_terms,
    gamma_from_coeffs,
    reduce_coeffs,
    sinr,
    spectral_efficiency,
)
from .solver import SolveConfig, SolveResult, alternating_solve

__version__ = "0.1.0"

__all__ = [
    "BOLTZMANN_J_PER_K",
    "NOISE_TEMPERATURE_K",
    "ApgConfig",
    "ApgTrace",
    "DegenerateBeamError",
    "EstimationStats",
    "LargeScaleModel",
    "OpCounter",
    "OracleResult",
    "PilotBook",
    "PowerState",
    "Realization",
    "ReducedCoeffs",
    "SimParams",
    "SinrTerms",
    "SolveConfig",
    "SolveResult",
    "alternating_solve",
    "apg_solve",
    "assign_pilots",
    "bisection_solve",
    "build_sinr_terms",
    "estimation_stats",
    "feasibility",
    "gamma_from_coeffs",
    "generate_geometry",
    "gradient",
    "inv_sinr",
    "large_scale_fading",
    "load_model_csv",
    "momentum_next",
    "noise_power_watt",
    "optimal_weights",
    "pairwise_distances",
    "path_loss_db",
    "project",
    "realize",
    "reduce_coeffs",
    "save_model_csv",
    "sinr",
    "smoothed_objective",
    "softmax_weights",
    "solve_b_system",
    "spectral_efficiency",
]
