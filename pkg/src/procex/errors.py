"""Exception types shared across the package."""

from __future__ import annotations


class CorpusFormatError(ValueError):
    """A corpus or prediction file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorpusValidationError(ValueError):
    """A document violates an annotation invariant."""

    def __init__(self, document: str, violations: list[str]):
        detail = "; ".join(violations)
        super().__init__(f"document {document!r}: {detail}")
        self.document = document
        self.violations = violations


class ConfigurationError(ValueError):
    """A run configuration is inconsistent or incomplete."""


class NumericalError(ArithmeticError):
    """Training produced a non-finite quantity."""
