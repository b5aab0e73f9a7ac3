from .core import (
    ClosurePolicy,
    ExitCode,
    FamilyKind,
    Geometry,
    GLPPError,
    TimeMode,
    WeightForm,
)
from .bridges import Bridge, TimedBridge, enumerate_bridges
from .measures import DensityFamily, DiscreteMeasure, MeasureFamily

from . import config, outputs

__all__ = [
    "Bridge",
    "ClosurePolicy",
    "DensityFamily",
    "DiscreteMeasure",
    "ExitCode",
    "FamilyKind",
    "GLPPError",
    "Geometry",
    "MeasureFamily",
    "TimeMode",
    "TimedBridge",
    "WeightForm",
    "config",
    "enumerate_bridges",
    "outputs",
]
