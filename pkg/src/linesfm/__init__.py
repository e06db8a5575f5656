"""Active estimation of 3D line parameters from a moving monocular camera.

The package bundles the line geometry (binormalized Pluecker coordinates and
their minimal spherical reduction), the apparent-motion models, a nonlinear
observer whose convergence is driven by the camera's linear velocity, the
excitation-shaping control laws, and a deterministic closed-loop simulator
with a CLI front end.
"""

from .errors import (
    ConfigError,
    ConstraintViolation,
    DegenerateLine,
    InfiniteDepth,
    LineEstimationError,
    PoleSingularity,
    ScenarioExhausted,
)
from .geometry import (
    POLE_EPS,
    LineBasis,
    PluckerLine,
    ReducedLineState,
    SphericalMoment,
    basis,
    line_from_point_direction,
    moment_to_spherical,
    perp_vector,
    reduce,
    spherical_to_moment,
    unreduce,
    wrap_angle,
)
from .motion import (
    CameraPose,
    CameraTwist,
    StateDerivative,
    integrate_pose,
    interaction_matrix,
    moment_coupling_matrix,
    plucker_dynamics,
    plucker_step,
    reduced_dynamics,
    rk4_step,
    spherical_dynamics,
    transform_line,
)
from .observer import (
    Innovation,
    ObserverGains,
    ObserverState,
    excitation_level,
    gain_matrix,
    innovation,
    observer_step,
)
from .control import (
    ControlGains,
    DofMask,
    apply_mask,
    compensating_omega,
    eigenvalues,
    ensure_excitation,
    jacobian_nu,
    linear_accel,
)
from .simulate import (
    FailureRecord,
    RunSummary,
    ScenarioConfig,
    TrajectoryLog,
    aggregate_summaries,
    batch_run,
    generate_scenario,
    measure,
    plucker_error,
    simulate,
    summarize_run,
)

__version__ = "0.1.0"

__all__ = [
    "CameraPose",
    "CameraTwist",
    "ConfigError",
    "ConstraintViolation",
    "ControlGains",
    "DegenerateLine",
    "DofMask",
    "FailureRecord",
    "InfiniteDepth",
    "Innovation",
    "LineBasis",
    "LineEstimationError",
    "ObserverGains",
    "ObserverState",
    "PluckerLine",
    "PoleSingularity",
    "POLE_EPS",
    "ReducedLineState",
    "RunSummary",
    "ScenarioConfig",
    "ScenarioExhausted",
    "SphericalMoment",
    "StateDerivative",
    "TrajectoryLog",
    "aggregate_summaries",
    "apply_mask",
    "basis",
    "batch_run",
    "compensating_omega",
    "eigenvalues",
    "ensure_excitation",
    "excitation_level",
    "gain_matrix",
    "generate_scenario",
    "innovation",
    "integrate_pose",
    "interaction_matrix",
    "jacobian_nu",
    "line_from_point_direction",
    "linear_accel",
    "measure",
    "moment_coupling_matrix",
    "moment_to_spherical",
    "observer_step",
    "perp_vector",
    "plucker_dynamics",
    "plucker_error",
    "plucker_step",
    "reduce",
    "reduced_dynamics",
    "rk4_step",
    "simulate",
    "spherical_dynamics",
    "spherical_to_moment",
    "summarize_run",
    "transform_line",
    "unreduce",
    "wrap_angle",
]
