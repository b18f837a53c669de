"""Exception types shared across the package."""


class DriftwiseError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DriftwiseError, ValueError):
    """Invalid configuration: bad parameter value, incompatible options, missing file."""


class CsvFormatError(DriftwiseError, ValueError):
    """Malformed CSV input; the message carries the offending row number."""


class SchemaError(DriftwiseError, ValueError):
    """An instance does not satisfy its schema, or model and data disagree on shape."""


class WarmupError(DriftwiseError, RuntimeError):
    """A sampler or estimator was queried before its warm-up completed."""


class DegenerateImportanceError(DriftwiseError, ValueError):
    """Min-max normalization is undefined because a vector is constant."""
