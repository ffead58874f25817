"""Self-tuning configuration knobs: profile, synthesize, control, validate."""

from .controller import (
    MAX_CONF,
    ControllerParams,
    ControllerState,
    SynthesisReport,
    compute_pole,
    compute_virtual_goal,
    control_step,
)
from .errors import (
    ConfigurationError,
    DegenerateGainError,
    FileFormatError,
    InsufficientDataError,
    KnobError,
    SynthesisError,
)
from .knobs import GoalRegistry, IndirectKnob, Knob, knob_new
from .profiling import (
    GroupStats,
    ProfileSample,
    compute_delta,
    compute_lambda,
    fit_alpha,
    group_stats,
    synthesize,
)
from .sysfiles import (
    GlobalSysFile,
    GoalEntry,
    GoalFile,
    KnobSysFile,
    parse_global_sys,
    parse_goal_file,
    parse_knob_sys,
    serialize_global_sys,
    serialize_goal_file,
    serialize_knob_sys,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_CONF",
    "ControllerParams",
    "ControllerState",
    "SynthesisReport",
    "compute_pole",
    "compute_virtual_goal",
    "control_step",
    "KnobError",
    "ConfigurationError",
    "FileFormatError",
    "SynthesisError",
    "InsufficientDataError",
    "DegenerateGainError",
    "GoalRegistry",
    "Knob",
    "IndirectKnob",
    "knob_new",
    "ProfileSample",
    "GroupStats",
    "group_stats",
    "fit_alpha",
    "compute_delta",
    "compute_lambda",
    "synthesize",
    "KnobSysFile",
    "GoalEntry",
    "GoalFile",
    "GlobalSysFile",
    "parse_knob_sys",
    "serialize_knob_sys",
    "parse_goal_file",
    "serialize_goal_file",
    "parse_global_sys",
    "serialize_global_sys",
    "__version__",
]
