"""Exception types shared across the toolkit.

The CLI maps DataError to exit code 2 (bad input / usage) and ComputeError
to exit code 1 (numerical failure mid-run).
"""


class DataError(ValueError):
    """Invalid input data or parameters."""


class ComputeError(RuntimeError):
    """A computation failed (non-finite loss, generation failure, ...)."""
