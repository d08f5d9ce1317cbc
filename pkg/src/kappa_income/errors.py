"""Exception types shared across the toolkit."""


class KappaIncomeError(Exception):
    """Base class for all toolkit errors."""


class ParseError(KappaIncomeError):
    """Input file is structurally malformed (bad header, row shape, or cell)."""


class ValidationError(KappaIncomeError):
    """Input parses but violates a data invariant."""


class DomainError(KappaIncomeError):
    """Argument lies outside the mathematical domain of an operation."""


class DegenerateInput(KappaIncomeError):
    """Input is well formed but makes the requested quantity undefined."""
