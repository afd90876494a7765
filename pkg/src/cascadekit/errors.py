"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: `InputError` -> 2, `NumericError` -> 3,
`ConfigMismatchError` -> 4.
"""

from __future__ import annotations


class CascadekitError(Exception):
    """Base class for all package errors."""


class InputError(CascadekitError):
    """Bad user input: missing files, malformed data, invalid options."""


class WeightFormatError(InputError):
    """A weight file is corrupt or does not match the network it is loaded for."""


class ConfigMismatchError(CascadekitError):
    """Structurally inconsistent configuration, e.g. channel-count mismatches."""


class NumericError(CascadekitError):
    """Non-finite values where finite ones are required."""


class TrainingDivergedError(NumericError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")
