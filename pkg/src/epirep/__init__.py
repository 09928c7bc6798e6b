"""Coupled SIS-epidemic / replicator-dynamics simulation and analysis toolkit."""

from .continuation import (
    BifurcationPoint,
    Branch,
    BranchSample,
    BranchTraceError,
    detect_transcritical,
    trace_branch,
)
from .equilibria import (
    BoundaryCaseError,
    CriticalLevels,
    DegenerateParametersError,
    EquilibriumReport,
    all_equilibria,
    critical_levels,
    eigenvalues_3x3,
    regime,
)
from .integrate import (
    IntegratorConfig,
    StiffnessError,
    Trajectory,
    crossing_events,
    integrate,
)
from .model import (
    Derivative,
    ModelParams,
    SystemState,
    beta_eff,
    default_params,
    delta_F,
    jacobian,
    vector_field,
)
from .slowfast import (
    DelayMeasurement,
    QuasiSteady,
    ReducedEpidemicCase,
    classify_reduced_epidemic,
    measure_bifurcation_delay,
    quasi_steady_y,
    reduced_behavioral_rhs,
    reduced_epidemic_rhs,
    simulate_reduced_epidemic,
)

__version__ = "0.1.0"
