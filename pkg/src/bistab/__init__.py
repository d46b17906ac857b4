"""Steady states, stability, and sweeps of a driven two-mode four-level
cavity mean-field model: exact multistability maps via polynomial reduction,
adaptive time integration, quasi-static hysteresis, and finite-size scans.
"""
from .dynamics import (
    NonConvergence,
    SweepRecord,
    Trajectory,
    hysteresis_sweep,
    integrate,
    phi_loop,
    settle,
)
from .errors import (
    BistabError,
    ConfigError,
    DegenerateParameterError,
    InvalidParameterError,
    MarginalStabilityError,
    SingularParameterError,
    StiffnessError,
    UndefinedNormalizationError,
)
from .model import (
    MeanFieldState,
    SystemParams,
    ValidationReport,
    cooperativity,
    jacobian,
    random_physical_state,
    rhs,
    validate,
)
from .observables import (
    DiagnosticReport,
    ObservableRecord,
    observable_record,
    physicality_check,
    purity_proxy,
    transmittance_approx,
    transmittance_exact,
    transmittance_from_inversion,
)
from .steady_state import (
    SolutionSet,
    SteadyState,
    alpha_of_x,
    classify_stability,
    excited_population_of_x,
    find_all_roots,
    fixed_point_residuals,
    multistart_oracle,
    polynomial_in_x1,
)
from .sweep import (
    ArcSweep,
    Branch,
    PhaseDiagram,
    arc_sweep,
    bistable_interval_width,
    finite_size_scan,
    phase_diagram_grid,
)

__version__ = "0.1.0"

__all__ = [
    "ArcSweep",
    "BistabError",
    "Branch",
    "ConfigError",
    "DegenerateParameterError",
    "DiagnosticReport",
    "InvalidParameterError",
    "MarginalStabilityError",
    "MeanFieldState",
    "NonConvergence",
    "ObservableRecord",
    "PhaseDiagram",
    "SingularParameterError",
    "SolutionSet",
    "SteadyState",
    "StiffnessError",
    "SweepRecord",
    "SystemParams",
    "Trajectory",
    "UndefinedNormalizationError",
    "ValidationReport",
    "alpha_of_x",
    "arc_sweep",
    "bistable_interval_width",
    "classify_stability",
    "cooperativity",
    "excited_population_of_x",
    "find_all_roots",
    "finite_size_scan",
    "fixed_point_residuals",
    "hysteresis_sweep",
    "integrate",
    "jacobian",
    "multistart_oracle",
    "observable_record",
    "phase_diagram_grid",
    "phi_loop",
    "physicality_check",
    "polynomial_in_x1",
    "purity_proxy",
    "random_physical_state",
    "rhs",
    "settle",
    "transmittance_approx",
    "transmittance_exact",
    "transmittance_from_inversion",
    "validate",
    "__version__",
]
