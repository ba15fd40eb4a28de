"""Exception hierarchy.

Data/model problems derive from :class:`JsrtDataError` so the CLI can map
them to exit status 2; everything else is a programming or usage error.
"""


class JsrtError(Exception):
    """Base class for all package errors."""


class JsrtDataError(JsrtError, ValueError):
    """Bad input data, bad model file or an impossible computation."""


class DatasetLoadError(JsrtDataError):
    pass


class TargetColumnMissing(DatasetLoadError):
    pass


class NonNumericColumn(DatasetLoadError):
    pass


class EmptyAfterFiltering(DatasetLoadError):
    pass


class InvalidFoldCount(JsrtDataError):
    pass


class LengthMismatch(JsrtDataError):
    pass


class EmptyInput(JsrtDataError):
    pass


class EmptyTrainingSet(JsrtDataError):
    pass


class DimensionMismatch(JsrtDataError):
    pass


class TooFewGroups(JsrtDataError):
    pass


class InvalidStats(JsrtDataError):
    pass


class NotJsEstimate(JsrtDataError):
    pass


class KTooLarge(JsrtDataError):
    pass


class InsufficientData(JsrtDataError):
    pass


class ModelFileError(JsrtDataError):
    pass


class SchemaVersionMismatch(ModelFileError):
    pass


class CorruptModel(ModelFileError):
    pass


class ConfigError(JsrtError, ValueError):
    """Invalid configuration values (usage error)."""
