"""Exception hierarchy shared by every qstring module."""


class QStringError(Exception):
    """Base class for all errors raised by qstring."""


class DomainError(QStringError, ValueError):
    """An argument lies outside the domain of the operation."""


class ToleranceUnreachable(QStringError):
    """A series or product did not meet its tail tolerance within ``max_terms``."""


class NonFiniteValue(QStringError, ArithmeticError):
    """An integrand returned inf/nan at a lattice point."""

    def __init__(self, index, x, value):
        super().__init__(f"integrand is not finite at lattice index {index} (x={x}): {value}")
        self.index = index


class PrecisionExhausted(QStringError):
    """The Gram recursion lost all significant bits at index ``n``."""

    def __init__(self, n, detail=""):
        msg = f"precision exhausted at n={n}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.n = n


class DegenerateStep(QStringError, ZeroDivisionError):
    """The forward map has a vanishing linear coefficient."""


class InvalidBracket(QStringError, ValueError):
    """Both shooting endpoints carry the same violation signature."""
