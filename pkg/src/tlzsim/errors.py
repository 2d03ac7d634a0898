"""Exception types shared across the package."""


class TlzError(Exception):
    """Base class for all tlzsim errors."""


class DomainError(TlzError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class DegenerateFieldError(DomainError):
    """The drive field vanishes, so the instantaneous eigenbasis is undefined."""


class IntegrationError(TlzError, RuntimeError):
    """The ODE solver failed to meet its tolerances within the step budget."""


class BracketBoundaryError(TlzError, RuntimeError):
    """A numeric maximum landed on the search-bracket boundary.

    Callers should widen the bracket on the reported side and retry.
    """

    def __init__(self, side: str, bracket: tuple[float, float]):
        self.side = side
        self.bracket = bracket
        super().__init__(
            f"probability maximum on {side} boundary of bracket {bracket}"
        )
