"""Exception hierarchy.

Two families matter to callers: ``ConfigError`` (bad parameters or usage,
CLI exit code 2) and ``DataError`` (bad input data or model files, CLI exit
code 3).
"""


class XidsError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(XidsError, ValueError):
    pass


class DataError(XidsError):
    pass


class InvalidParameter(ConfigError):
    pass


class InvalidSF(InvalidParameter):
    pass


class UnsupportedModel(ConfigError):
    pass


class MissingLabelColumn(DataError):
    pass


class UnknownColumn(DataError):
    pass


class RaggedRow(DataError):
    def __init__(self, line, expected, got):
        super().__init__(f"line {line}: expected {expected} cells, got {got}")
        self.line = line


class UnparseableNumeric(DataError):
    def __init__(self, line, column, value):
        super().__init__(f"line {line}: column {column!r} has non-numeric value {value!r}")
        self.line = line
        self.column = column


class UnmappedLabel(DataError):
    pass


class UnknownFeatureName(DataError):
    pass


class ClassWithSingleSample(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class EmptyData(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MapTooSmall(DataError):
    pass


class NoLabeledNeuron(DataError):
    pass


class ZeroLocalSamples(DataError):
    pass


class UnroutableSample(DataError):
    pass


class UnknownArtifactKind(DataError):
    pass


class ObjectiveFailure(XidsError):
    def __init__(self, trial, cause):
        super().__init__(f"trial {trial} failed: {cause!r}")
        self.trial = trial
        self.cause = cause
