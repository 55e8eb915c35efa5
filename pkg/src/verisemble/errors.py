"""Exception types shared across the package.

The CLI maps these (plus ``OSError``/``ValueError``) to exit code 2;
anything else is treated as an internal error (exit code 1).
"""

from __future__ import annotations


class VerisembleError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(VerisembleError):
    """A file or byte stream does not conform to its declared format."""


class ValidationError(VerisembleError):
    """Data is well-formed but violates a documented invariant or contract."""


class ShapeError(VerisembleError):
    """Tensor or weight-array shapes do not line up."""


class LoadError(VerisembleError):
    """A referenced resource (frame file, weight file) is missing or unreadable."""
