from .family import (
    FamilySpec,
    coerce_family,
    parse_family,
    preset_families,
    preset_rows,
)
from .runs import (
    ExactConfig,
    PcaCheckConfig,
    QuarterPlaneConfig,
    RunConfig,
    SimulationConfig,
    UserFriendlyError,
    build_config,
    load_config_file,
)

__all__ = [
    "ExactConfig",
    "FamilySpec",
    "PcaCheckConfig",
    "QuarterPlaneConfig",
    "RunConfig",
    "SimulationConfig",
    "UserFriendlyError",
    "build_config",
    "coerce_family",
    "load_config_file",
    "parse_family",
    "preset_families",
    "preset_rows",
]
