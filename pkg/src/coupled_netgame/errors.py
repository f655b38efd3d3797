"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NetGameError(Exception):
    exit_code = 1


class ConfigError(NetGameError, ValueError):
    exit_code = 1


class InfeasibleProblemError(NetGameError):
    exit_code = 2


class AssumptionViolationError(NetGameError):
    exit_code = 3


class NumericalFailureError(NetGameError):
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}
