from typing import Any


class RobustaError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ModelError(RobustaError):
    """A structurally malformed automaton or model file."""

    exit_code = 2


class ModelSyntaxError(ModelError):
    """A syntax error in a model file, with its position."""

    def __init__(self, message: str, path: str = "<string>", line: int = 0, column: int = 0):
        self.path = path
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"{path}:{line}:{column}: {message}")


class CompositionError(ModelError):
    """Two automata cannot be composed (shared output actions)."""


class ResourceLimitError(RobustaError):
    """The symbolic state space exceeded the configured limit."""

    exit_code = 3

    def __init__(self, message: str, states: int = 0):
        self.states = states
        super().__init__(message)


class StrategyError(RobustaError):
    """A strategy was requested from a game that cannot provide one."""


class ReplayError(RobustaError):
    """The parametric replay of a spoiling strategy produced no usable bound."""


class RefinementError(RobustaError):
    """Refinement cannot be decided for the given pair of automata."""

    exit_code = 2


class ImplementationError(RobustaError):
    """An implementation violates output urgency or independent progress."""


class SearchOutcome(RobustaError):
    """Base class for search terminations that still carry a result."""

    def __init__(self, message: str, result: Any = None):
        self.result = result
        super().__init__(message)


class NotRobustAtZero(SearchOutcome):
    """No positive perturbation is admissible (or the game is lost at zero)."""

    exit_code = 1


class MaxValueWon(SearchOutcome):
    """The game is still won at the largest perturbation that was tried."""

    exit_code = 4
