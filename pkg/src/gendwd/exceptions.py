class DatasetError(ValueError):
    """Raised when input data is malformed or cannot be used for fitting."""


class DegenerateFoldsError(DatasetError):
    """Raised when no cross-validation fold assignment keeps both classes in every training fold."""


class ModelFileError(ValueError):
    """Raised when a model file cannot be parsed."""


class SchemaVersionError(ModelFileError):
    """Raised when a model file was written with an unsupported schema version."""


class DegenerateModelError(ValueError):
    """Raised when a fitted model has no direction (all-zero coefficients)."""


class SingularSystemError(RuntimeError):
    """Raised when a system matrix cannot be factorized even after diagonal jitter."""
