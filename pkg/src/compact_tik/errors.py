"""Exception types shared across the package.

Invalid arguments raise the builtin ``ValueError``; this module only adds
the failure mode that has no builtin counterpart.
"""


class NumericalFailureError(RuntimeError):
    """Raised when a computation produces non-finite values or a solver breaks down."""
