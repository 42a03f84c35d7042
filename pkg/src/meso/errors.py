"""Exception hierarchy shared by every meso module."""


class MesoError(Exception):
    """Base class for all errors raised by meso."""


class InputLengthError(MesoError):
    pass


class DomainError(MesoError):
    pass


class ParseError(MesoError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(MesoError):
    pass


class SpecError(MesoError):
    pass


class StateError(MesoError):
    pass


class FleetError(MesoError):
    pass


class BigMError(MesoError):
    pass


class AssemblyError(MesoError):
    pass


class InfeasiblePointError(MesoError):
    pass


class NonconvexError(MesoError):
    pass


class NumericsError(MesoError):
    pass


class ExportError(MesoError):
    pass


class ValidationError(MesoError):
    """Raised when a solver-produced schedule fails the independent re-check."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"schedule failed validation: {head}{more}")
