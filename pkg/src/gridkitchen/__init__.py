"""Batch-parallel two-cook kitchen gridworld with curriculum-design tooling."""

from .env import (
    Action,
    EnvConfig,
    EnvState,
    Event,
    HeldItem,
    PotState,
    StepOutcome,
    apply_interact,
    centralized_observation,
    observe,
    reset,
    resolve_movement,
    step,
)
from .levels import (
    Level,
    LevelError,
    Orientation,
    Tile,
    ValidationReport,
    builtin_eval_suite,
    digest_hex,
    level_digest,
    pad,
    parse_ascii,
    render_ascii,
    symmetry_suite,
    validate,
)
from .stepper import BatchSim, available_backends, default_backend_name

__version__ = "0.1.0"
