"""Simulation and measurement-current statistics of the pumped Kerr resonator."""

__version__ = "0.1.0"

from .model import ModelParams, SemiclassicalFixedPoints
from .fcs import CurrentStatistics, MeasurementScheme, homodyne, photodetection
from .trajectories import TrajectoryConfig, TrajectoryRecord, simulate

__all__ = [
    "__version__",
    "ModelParams",
    "SemiclassicalFixedPoints",
    "CurrentStatistics",
    "MeasurementScheme",
    "photodetection",
    "homodyne",
    "TrajectoryConfig",
    "TrajectoryRecord",
    "simulate",
]
