from __future__ import annotations


class QHistError(Exception):
    """Base class for all errors raised by qhist."""


class AmplitudeParseError(QHistError, ValueError):
    def __init__(self, message: str, text: str, position: int) -> None:
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class SpaceMismatchError(QHistError, ValueError):
    pass


class BackendMismatchError(QHistError, TypeError):
    pass


class InvalidModelError(QHistError, ValueError):
    pass


class InvalidFunctionalError(QHistError, ValueError):
    """Raised when a functional fails Hermiticity, normalization or positivity.

    The offending :class:`~qhist.core.ValidationReport` is attached as ``report``.
    """

    def __init__(self, message: str, report=None) -> None:
        self.report = report
        super().__init__(message)


class NormalizationError(InvalidFunctionalError):
    def __init__(self, total, report=None) -> None:
        self.total = total
        super().__init__(f"functional is not normalized: sum of entries is {total}, expected 1", report)


class InconsistentPartitionError(QHistError, ValueError):
    pass


class CapExceededError(QHistError, RuntimeError):
    def __init__(self, what: str, n: int, cap: int, estimate: int | None = None) -> None:
        self.n = n
        self.cap = cap
        self.estimate = estimate
        msg = f"{what}: n={n} exceeds cap {cap}"
        if estimate is not None:
            msg += f" (about {estimate:,} candidates)"
        super().__init__(msg)


class SchemaError(QHistError, ValueError):
    pass
