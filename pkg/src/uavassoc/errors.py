"""Exception types shared across the simulator."""


class InvalidConfigurationError(ValueError):
    """A parameter or configuration value is outside its valid domain."""


class ScenarioRejectedError(RuntimeError):
    """A scenario cannot support the requested operation, e.g. it holds
    fewer base stations than the candidate set size. Callers that generate
    scenarios are expected to regenerate with a derived sub-seed."""


class ModelFormatError(ValueError):
    """A model file failed structural validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{message} (field: {field})")


class UnsupportedVersionError(ValueError):
    """A model file declares a format version this code does not read."""


class MissingModelError(LookupError):
    """No trained model is available for a requested configuration point."""
