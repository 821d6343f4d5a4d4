"""Exception types shared across the package.

The CLI maps these onto process exit codes: validation errors exit 2,
I/O errors (plain OSError) exit 3, capability errors exit 4.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or schema."""


class CapabilityError(RuntimeError):
    """Request is valid but outside what this implementation supports
    (e.g. explicit polynomial map on high-dimensional input)."""
