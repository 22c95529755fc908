"""Exact algorithms for the line-based dial-a-ride problem and turn minimisation."""

from .model import (
    Direction,
    Instance,
    Kind,
    Line,
    Request,
    Route,
    Solution,
    Subroute,
    ThreePartitionInstance,
    Waypoint,
    direction_of,
    overlaps,
    validate_instance,
)

__all__ = [
    "Direction",
    "Instance",
    "Kind",
    "Line",
    "Request",
    "Route",
    "Solution",
    "Subroute",
    "ThreePartitionInstance",
    "Waypoint",
    "direction_of",
    "overlaps",
    "validate_instance",
]

__version__ = "0.1.0"
