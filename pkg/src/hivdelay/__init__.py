"""Delayed within-host HIV model: dynamics, stability tests, and optimal
treatment scheduling under incubation and pharmacological delays."""

from .model import (
    Equilibrium,
    ModelParams,
    StateTriple,
    ThresholdReport,
    controlled_field,
    controlled_rhs,
    equilibria,
    thresholds,
    uncontrolled_field,
    uncontrolled_rhs,
)
from .dde import (
    GridConfig,
    HistorySpec,
    IntegrationError,
    Trajectory,
    integrate,
    sample,
)
from .stability import (
    CharCoeffsE2,
    CrossingSextic,
    LinearizationPair,
    RouthHurwitzE2,
    StabilityVerdict,
    Verdict,
    char_E0,
    char_E1,
    char_E2,
    char_coeffs_E2,
    char_det,
    classify_E0,
    classify_E1,
    classify_E2_at_tau,
    crossing_sextic_E2,
    linearize,
    routh_hurwitz_E2,
)
from .control import (
    ControlSolution,
    OcpConfig,
    backward_sweep,
    extract_switchings,
    fbsm_solve,
    objective,
    switching_function,
    switching_profile,
)
from .scenario import (
    ConfigError,
    RunReport,
    ScenarioConfig,
    load_config,
    run,
    settling_time,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "ModelParams", "StateTriple", "ThresholdReport", "Equilibrium",
    "thresholds", "equilibria", "uncontrolled_rhs", "controlled_rhs",
    "uncontrolled_field", "controlled_field",
    # integrator
    "HistorySpec", "GridConfig", "Trajectory", "IntegrationError",
    "integrate", "sample",
    # stability
    "Verdict", "StabilityVerdict", "LinearizationPair", "CharCoeffsE2",
    "RouthHurwitzE2", "CrossingSextic", "linearize", "char_det",
    "char_E0", "char_E1", "char_E2", "char_coeffs_E2",
    "classify_E0", "classify_E1", "routh_hurwitz_E2",
    "crossing_sextic_E2", "classify_E2_at_tau",
    # optimal control
    "OcpConfig", "ControlSolution", "objective", "backward_sweep",
    "switching_function", "switching_profile", "fbsm_solve", "extract_switchings",
    # scenarios
    "ScenarioConfig", "RunReport", "ConfigError", "load_config", "run",
    "settling_time",
]
