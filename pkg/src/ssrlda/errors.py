"""Exception types shared across the package."""


class ParseError(ValueError):
    """A data file could not be parsed; the message names the offending line."""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class SingularSystemError(ArithmeticError):
    """A closed-form linear system is singular or too ill-conditioned to solve."""


class AllClassesSkippedError(ValidationError):
    """Every class is missing from at least one domain, so no local subset exists."""
