"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 2 (argparse),
DataFormatError and ProbeError exit 3, NumericalError exits 4.
"""


class FlmError(Exception):
    """Base class for all package errors."""


class DataFormatError(FlmError):
    """Malformed or inconsistent data: bad container bytes, schema
    violations, shape/task mismatches, invalid configuration values."""


class TaskMismatchError(DataFormatError):
    """A dataset, library, or model was combined with the wrong task kind."""


class NumericalError(FlmError):
    """A computation produced non-finite values or a solver failed."""


class ProbeError(FlmError):
    """Protocol violation or failure while querying an external predictor."""


class ResourceCapError(FlmError):
    """A job was refused because it exceeds a configured resource cap."""
