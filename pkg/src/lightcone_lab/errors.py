"""Exception types shared across the package."""


class LightconeLabError(Exception):
    """Base class for all package errors."""


class ConfigError(LightconeLabError):
    """Invalid configuration value or unknown option."""


class ResolutionError(ConfigError):
    """Grid too coarse to resolve the requested profile."""


class ParameterError(LightconeLabError):
    """Out-of-range numerical parameter."""


class ShapeError(LightconeLabError):
    """Mismatched grids or operator dimensions."""


class ModelError(LightconeLabError):
    """Ill-formed physical model (non-real potential, non-Hermitian matrix, ...)."""


class CapacityError(LightconeLabError):
    """Requested computation exceeds the dense-path size caps."""


class HypothesisError(LightconeLabError):
    """A mathematical hypothesis of the evaluated statement is violated."""


class DivergenceError(LightconeLabError):
    """A requested integral does not converge."""


class PlanError(LightconeLabError):
    """Invalid tiered mode plan (floor or budget violation)."""


class TruncationError(LightconeLabError):
    """Truncation depth exceeds the available modes."""
