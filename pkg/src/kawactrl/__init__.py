"""Spectral simulation and low-mode control synthesis for the Kawahara equation."""

from .errors import (
    ConfigError,
    ConstantNotRepresentable,
    DecompositionError,
    KawactrlError,
    NoConvergence,
    NotGenerator,
    ResolutionError,
    SearchExhausted,
    UndersampledGrid,
    WindowCollapse,
)
from .fields import (
    SobolevIndex,
    SpectralField,
    advection,
    coeff_distance,
    cubic_integral,
    derivative,
    from_trig,
    grid_evaluate,
    grid_transform,
    sobolev_norm,
)
from .modes import (
    ModeSet,
    SaturationSequence,
    TrigDecomposition,
    closure_step,
    decompose,
    is_generator,
    min_level,
    saturate,
    verify_decomposition,
)
from .solver import (
    ControlSchedule,
    ControlSegment,
    LinearSymbol,
    SolverConfig,
    Trajectory,
    asymptotic_probe,
    energy_drift,
    energy_functional,
    flow,
    l2_norm_drift,
    linear_group,
    run_schedule,
    stability_ratio,
    write_trajectory_csv,
)
from .steering import (
    SynthesisParams,
    SynthesisReport,
    estimate_coast_window,
    necessity_probe,
    random_schedule,
    steer_elementary,
    steer_quadratic,
    synthesize_any_time,
    synthesize_small_time,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstantNotRepresentable",
    "ControlSchedule",
    "ControlSegment",
    "DecompositionError",
    "KawactrlError",
    "LinearSymbol",
    "ModeSet",
    "NoConvergence",
    "NotGenerator",
    "ResolutionError",
    "SaturationSequence",
    "SearchExhausted",
    "SobolevIndex",
    "SolverConfig",
    "SpectralField",
    "SynthesisParams",
    "SynthesisReport",
    "Trajectory",
    "TrigDecomposition",
    "UndersampledGrid",
    "WindowCollapse",
    "advection",
    "asymptotic_probe",
    "closure_step",
    "coeff_distance",
    "cubic_integral",
    "decompose",
    "derivative",
    "energy_drift",
    "energy_functional",
    "estimate_coast_window",
    "flow",
    "from_trig",
    "grid_evaluate",
    "grid_transform",
    "is_generator",
    "l2_norm_drift",
    "linear_group",
    "min_level",
    "necessity_probe",
    "random_schedule",
    "run_schedule",
    "saturate",
    "sobolev_norm",
    "stability_ratio",
    "steer_elementary",
    "steer_quadratic",
    "synthesize_any_time",
    "synthesize_small_time",
    "verify_decomposition",
    "write_trajectory_csv",
]
