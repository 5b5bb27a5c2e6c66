"""Attribute ground-camera contrails to the flights that produced them."""

from contrailmatch._accel import backend_name
from contrailmatch.attribution import (
    AttributionResult,
    AttributionState,
    Frame,
    MatchConfig,
    ObservedContrail,
    attribute_frame,
)
from contrailmatch.camera import CameraModel, project, project_polygon
from contrailmatch.errors import ContrailMatchError, DataError, LoadError, OutOfDomainError, ScenarioError
from contrailmatch.met import MetGrid, WindVector, load_met_grid, sample_wind

__version__ = "0.1.0"

__all__ = [
    "AttributionResult",
    "AttributionState",
    "CameraModel",
    "ContrailMatchError",
    "DataError",
    "Frame",
    "LoadError",
    "MatchConfig",
    "MetGrid",
    "ObservedContrail",
    "OutOfDomainError",
    "ScenarioError",
    "WindVector",
    "attribute_frame",
    "backend_name",
    "load_met_grid",
    "project",
    "project_polygon",
    "sample_wind",
]
