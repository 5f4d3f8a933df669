"""Exception hierarchy; CLI maps these onto exit codes."""


class CobtError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(CobtError):
    """Malformed input: bad files, broken invariants, unknown ids."""


class ExecutionError(CobtError):
    """A behavior tree execution failed."""


class BudgetExhaustedError(ExecutionError):
    """Tick budget ran out before the root succeeded."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
