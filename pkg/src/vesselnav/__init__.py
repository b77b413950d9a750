"""Simulated endovascular navigation toolkit.

Subpackages provide vessel-tree geometry, composable device shapes, a
quasi-static elastic-rod physics engine with lumen collision, fluoroscopy
projection and tracking, an episode-based navigation environment, scripted
and neural controllers, benchmark definitions and an evaluation harness.
"""

from .errors import (
    FormatError,
    GenerationError,
    InternalError,
    InvalidInputError,
    ProjectionError,
    UsageError,
    VesselNavError,
)

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "GenerationError",
    "InternalError",
    "InvalidInputError",
    "ProjectionError",
    "UsageError",
    "VesselNavError",
    "__version__",
]
