"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """Distribution or instance data violates a structural invariant.

    Carries the full list of problems so callers can report all of them
    at once instead of failing on the first.
    """

    def __init__(self, problems):
        self.problems = tuple(problems)
        super().__init__("; ".join(self.problems))


class InvariantViolation(RuntimeError):
    """A provably-true inequality evaluated negative beyond tolerance.

    The bounds checked by this package hold universally, so a violation
    always signals an implementation defect, never bad input data.
    """
