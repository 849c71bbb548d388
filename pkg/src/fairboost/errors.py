"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration and schema problems
exit with 2, data/training/metric failures exit with 1.
"""


class ConfigError(Exception):
    """A config file or config value is malformed or out of range."""


class SchemaError(Exception):
    """A column schema is invalid or does not match a data file."""


class DataError(Exception):
    """A data file cannot be turned into a usable dataset."""


class TrainingError(Exception):
    """Training cannot proceed (degenerate labels, bad shapes, ...)."""


class MetricError(Exception):
    """A metric is undefined for the given inputs (empty group, ...)."""
