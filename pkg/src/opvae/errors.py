"""Exception hierarchy for the opvae package.

The CLI maps these onto process exit codes: configuration and validation
problems exit 2, file-format problems exit 3, numerical failures exit 4.
"""


class OpvaeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(OpvaeError):
    """Invalid configuration value, unknown key, or bad construction argument."""


class ShapeError(OpvaeError):
    """Array or network shape mismatch."""


class ContractError(OpvaeError):
    """A documented precondition was violated (empty set, non-scalar loss, ...)."""


class DomainError(OpvaeError):
    """Input outside the mathematical domain of an operation (e.g. k <= 0)."""


class NumericalError(OpvaeError):
    """A numerical routine failed (factorization, iterative solve, eigensolver)."""


class TrainingError(NumericalError):
    """Non-finite loss or gradient during optimization; message carries the step."""


class SensorPlacementError(OpvaeError):
    """Could not place the requested number of sensors under the spacing rule."""


class FileFormatError(OpvaeError):
    """Malformed on-disk artifact (dataset, checkpoint, observation CSV)."""


class VersionMismatchError(FileFormatError):
    """File carries an unsupported format version."""


class TruncatedPayloadError(FileFormatError):
    """File ended before the declared payload was complete."""
