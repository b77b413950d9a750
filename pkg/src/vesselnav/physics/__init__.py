"""Device physics: the engine interface and the default rod engine."""

from .backend import BACKEND_NAME, available_backends
from .engine import (
    DEFAULT_FRAME_RATE,
    VELOCITY_LIMIT_ROTATION,
    VELOCITY_LIMIT_TRANSLATION,
    Action,
    CoaxialCoupling,
    EngineConfig,
    RodEngine,
    RodState,
    SimError,
    collide_project,
    couple_coaxial,
)
from .tube import TubeTable, build_tube_table

__all__ = [
    "Action",
    "BACKEND_NAME",
    "CoaxialCoupling",
    "DEFAULT_FRAME_RATE",
    "EngineConfig",
    "RodEngine",
    "RodState",
    "SimError",
    "TubeTable",
    "VELOCITY_LIMIT_ROTATION",
    "VELOCITY_LIMIT_TRANSLATION",
    "available_backends",
    "build_tube_table",
    "collide_project",
    "couple_coaxial",
]
