"""Exception hierarchy shared by all szegolab modules."""


class SzegoLabError(Exception):
    """Base class for every error raised by the library."""


class SizeMismatch(SzegoLabError, ValueError):
    pass


class GridTooCoarse(SzegoLabError, ValueError):
    pass


class SingularSymbol(SzegoLabError, ValueError):
    pass


class NonzeroWinding(SzegoLabError, ValueError):
    pass


class NotEven(SzegoLabError, ValueError):
    pass


class NotBanded(SzegoLabError, ValueError):
    pass


class OutOfRange(SzegoLabError, IndexError):
    pass


class RegionViolation(SzegoLabError, ValueError):
    pass


class SingularMatrix(SzegoLabError, ArithmeticError):
    pass


class NumericalFailure(SzegoLabError, ArithmeticError):
    """A numerical stage could not produce a trustworthy value.

    ``stage`` names the pipeline step that failed so reports can point at it.
    """

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class NoConvergence(NumericalFailure):
    def __init__(self, message: str, schedule=None, stage: str | None = None):
        super().__init__(message, stage=stage)
        self.schedule = list(schedule or [])


class IllConditioned(NumericalFailure):
    pass


class ResidualTooLarge(NumericalFailure):
    pass


class AliasWarning(UserWarning):
    """Coefficients at the edge of a requested band exceed the tail tolerance."""
