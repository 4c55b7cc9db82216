"""Exception types shared across subpackages."""


class RadioShiftError(Exception):
    pass


class ConfigError(RadioShiftError, ValueError):
    pass


class ShapeError(RadioShiftError, ValueError):
    pass


class LabelError(RadioShiftError, ValueError):
    pass


class DegenerateBatchError(RadioShiftError, ValueError):
    pass


class InsufficientSamplesError(RadioShiftError, ValueError):
    pass


class DivergenceError(RadioShiftError, FloatingPointError):
    """Raised when a training loss becomes non-finite."""

    def __init__(self, message, seed=None, step=None):
        super().__init__(message)
        self.seed = seed
        self.step = step


class TargetLabelAccessError(RadioShiftError, PermissionError):
    """Raised when training code touches target-domain labels."""
