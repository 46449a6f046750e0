"""Exception types shared across the package."""


class MisdkitError(Exception):
    """Base class for all package errors."""


class DimensionError(MisdkitError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class ParameterError(MisdkitError, ValueError):
    """An argument value is outside its documented domain."""


class GraphError(MisdkitError, RuntimeError):
    """Misuse of the autodiff graph, e.g. backward from a non-scalar."""


class FormatError(MisdkitError, ValueError):
    """A file does not conform to its declared on-disk format."""


class UndefinedMetricError(MisdkitError, ValueError):
    """A metric is undefined for the given records (e.g. single-class input)."""


class TrainingError(MisdkitError, RuntimeError):
    """Training diverged or otherwise failed; message names epoch and step."""


class ConfigError(MisdkitError, ValueError):
    """Invalid experiment configuration (unknown key, bad value, missing file)."""
