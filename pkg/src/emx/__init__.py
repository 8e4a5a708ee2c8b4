"""Price-feedback electricity market models.

Continuous, discrete, delayed and fractional-order simulators, matrix-pencil
stability analysis, equilibrium solvers and merit-order dispatch.
"""

from .continuous import (
    ConstraintLog,
    HistoryBuffer,
    MemorySpec,
    Method,
    SimulationBlowUp,
    StepperConfig,
    rhs_full,
    simulate_dae_balanced,
    simulate_delay,
    simulate_ode,
    simulate_zero_imbalance,
)
from .discrete import simulate_discrete, simulate_discrete_memory
from .dispatch import (
    DispatchProblem,
    DispatchResult,
    InfeasibleDispatch,
    clear_market,
    min_cost_dispatch,
    social_welfare,
)
from .equilibrium import (
    EquilibriumResult,
    Status,
    equilibrium_sloped,
    equilibrium_solve,
    model_equilibrium,
)
from .fractional import FractionalSpec, caputo_weights, simulate_fractional
from .model import (
    DimensionError,
    LinearSystem,
    MarketParams,
    MarketState,
    ParameterError,
    SignError,
    Trajectory,
    Variant,
    assemble_linear_system,
    make_params,
)
from .pencil import (
    SpectrumReport,
    Verdict,
    classify_pencil,
    dual_spectrum,
    generalized_eigenvalues,
    lyapunov_check,
    lyapunov_solve_standard,
    mode_metrics,
    stability_verdict,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintLog",
    "DimensionError",
    "DispatchProblem",
    "DispatchResult",
    "EquilibriumResult",
    "FractionalSpec",
    "HistoryBuffer",
    "InfeasibleDispatch",
    "LinearSystem",
    "MarketParams",
    "MarketState",
    "MemorySpec",
    "Method",
    "ParameterError",
    "SignError",
    "SimulationBlowUp",
    "SpectrumReport",
    "Status",
    "StepperConfig",
    "Trajectory",
    "Variant",
    "Verdict",
    "assemble_linear_system",
    "caputo_weights",
    "classify_pencil",
    "clear_market",
    "dual_spectrum",
    "equilibrium_sloped",
    "equilibrium_solve",
    "generalized_eigenvalues",
    "lyapunov_check",
    "lyapunov_solve_standard",
    "make_params",
    "min_cost_dispatch",
    "mode_metrics",
    "model_equilibrium",
    "rhs_full",
    "simulate_dae_balanced",
    "simulate_delay",
    "simulate_discrete",
    "simulate_discrete_memory",
    "simulate_fractional",
    "simulate_ode",
    "simulate_zero_imbalance",
    "social_welfare",
    "stability_verdict",
]
