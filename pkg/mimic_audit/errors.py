"""Exception types raised across the toolkit.

Every error carries the process exit code the CLI reports for it:
0 ok, 2 input format, 3 I/O, 4 data insufficiency, 5 version mismatch.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_VERSION = 5


class MimicAuditError(ValueError):
    exit_code = EXIT_FORMAT


# Audio ingestion
class WavFormatError(MimicAuditError):
    pass


class UnsupportedFormatError(MimicAuditError):
    pass


class TruncatedWavError(MimicAuditError):
    pass


# Numerical kernels
class DomainError(MimicAuditError):
    pass


class FftSizeError(MimicAuditError):
    pass


class ParameterError(MimicAuditError):
    pass


class DimensionError(MimicAuditError):
    pass


class EmptyInputError(MimicAuditError):
    pass


# Dataset handling
class NamingConventionError(MimicAuditError):
    pass


class DuplicateIndexError(MimicAuditError):
    pass


class FeatureCsvError(MimicAuditError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class ConfigError(MimicAuditError):
    pass


class PathAccessError(MimicAuditError):
    exit_code = EXIT_IO


class StratificationError(MimicAuditError):
    exit_code = EXIT_DATA


class InsufficientDataError(MimicAuditError):
    exit_code = EXIT_DATA


class TrainingError(MimicAuditError):
    exit_code = EXIT_DATA


class UndefinedMetricError(MimicAuditError):
    exit_code = EXIT_DATA

    def __init__(self, metric: str):
        self.metric = metric
        super().__init__(f"metric '{metric}' is undefined (zero denominator)")


class SchemaVersionError(MimicAuditError):
    exit_code = EXIT_VERSION


class ModelFileError(MimicAuditError):
    pass
