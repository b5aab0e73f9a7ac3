from __future__ import annotations

from enum import Enum

# =============================================================================
# CONSTANTS
# =============================================================================
NORMALIZATION_TOL = 1e-12
QUADRATURE_TOL = 1e-9
UNDERFLOW_MASS = 1e-300
LOG_SPACE_BELOW = 1e-250
SEED_ENV_VAR = "GLPP_SEED"
DEFAULT_BRIDGE_CAP = 8
DEFAULT_ZETA_CAP = 4000
MIN_GEOMETRIC_CAP = 64

# ============================================================
# ENUMS
# ============================================================


class FamilyKind(Enum):
    """How a measure family maps a gap to its waiting-time law."""

    CONSTANT = "constant"
    INTEGRABLE = "integrable"
    EDGE_LPP = "edge_lpp"
    CUSTOM_TABLE = "custom_table"

    @classmethod
    def from_clean_name(cls, clean_name: str) -> "FamilyKind":
        """Return the kind from its lowercase value."""
        for kind in cls:
            if kind.value == clean_name:
                return kind
        raise ValueError(f"Unknown family kind: {clean_name}")


class TimeMode(Enum):
    """Clock of a front-line chain."""

    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


class ClosurePolicy(Enum):
    """What the truncated oracle does with mass leaving the age cap."""

    LEAK_AND_RENORMALIZE = "leak"
    REFLECT_TO_CAP = "reflect"


class WeightForm(Enum):
    """The three equivalent writings of the stationary weight W."""

    NORMALIZED = 1
    FACTORED = 2
    COLLAPSED = 3

    @classmethod
    def coerce(cls, form: "int | WeightForm") -> "WeightForm":
        if isinstance(form, cls):
            return form
        return cls(int(form))


class Geometry(Enum):
    """Lattice on which a growth field lives."""

    CYLINDER = "cylinder"
    QUARTER_PLANE = "quarter_plane"


# ============================================================
# EXCEPTIONS
# ============================================================


class ExitCode:
    """Standard exit codes for CLI commands."""

    SUCCESS = 0
    GENERAL_ERROR = 1
    INVALID_INPUT = 2
    OPERATION_FAILED = 3
    DIVERGENT_INPUT = 4


class GLPPError(Exception):
    """Base class for every error raised by the library."""

    exit_code: int = ExitCode.GENERAL_ERROR


class ConfigError(GLPPError):
    """A family specification or run configuration cannot be used."""

    exit_code = ExitCode.INVALID_INPUT


class EmptyGrid(ConfigError):
    pass


class CapExceeded(ConfigError):
    pass


class StateSpaceTooLarge(ConfigError):
    pass


class ParityViolation(ConfigError):
    pass


class SupportMismatch(ConfigError):
    pass


class NumericalFailure(GLPPError):
    """A computation could not reach the accuracy it promises."""

    exit_code = ExitCode.OPERATION_FAILED


class CertificateFailure(NumericalFailure):
    pass


class TailUnderflow(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class EventBudgetExceeded(NumericalFailure):
    pass


class InsufficientSamples(NumericalFailure):
    pass


class NotMaterialized(NumericalFailure):
    pass


class BoxExhausted(NumericalFailure):
    pass


class TruncationNotConverged(NumericalFailure):
    pass


class ExcessLeak(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class DivergentSqrtSum(GLPPError):
    """Σ√μ₀ cannot be certified finite."""

    exit_code = ExitCode.DIVERGENT_INPUT
