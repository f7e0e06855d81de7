"""Error types shared across the package.

DomainError covers invalid inputs and broken preconditions, NumericError
covers solver/optimizer failures, UnconvergedError covers ensembles whose
statistical convergence criterion is not met.  The CLI maps these onto
exit codes 2, 3 and 4 respectively.
"""


class DomainError(ValueError):
    """An input violates a documented precondition or invariant."""


class NumericError(RuntimeError):
    """A numerical routine failed (eigensolver, integrator, optimizer)."""

    def __init__(self, message, seed=None):
        if seed is not None:
            message = f"{message} (realization seed={seed})"
        super().__init__(message)
        self.seed = seed


class UnconvergedError(RuntimeError):
    """An ensemble did not meet its convergence criterion."""
