from .files import bridge_law_frame, to_json_text, write_frame, write_json
from .plots import plot_bridge_law, plot_shape_profile, reference_curve
from .schemas import (
    BridgeLawFrame,
    EventFrame,
    FieldFrame,
    ShapeProfileFrame,
    TrajectoryFrame,
    TransitionFrame,
)

__all__ = [
    "BridgeLawFrame",
    "EventFrame",
    "FieldFrame",
    "ShapeProfileFrame",
    "TrajectoryFrame",
    "TransitionFrame",
    "bridge_law_frame",
    "plot_bridge_law",
    "plot_shape_profile",
    "reference_curve",
    "to_json_text",
    "write_frame",
    "write_json",
]
