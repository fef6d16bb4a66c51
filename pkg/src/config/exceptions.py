"""
Exception hierarchy shared by every subpackage.

Input-shape problems derive from ValueError and runtime failures from
RuntimeError, so callers that only know the builtin types keep working.
"""
from typing import Optional


class AgencyError(Exception):
    """Base class for all errors raised by the toolkit"""


class SchemaMismatchError(AgencyError, ValueError):
    """A feature vector does not match the schema a decision function expects"""


class DecisionValueError(AgencyError, ValueError):
    """A decision function produced a non-finite or non-positive value"""


class ShapeContractError(AgencyError, ValueError):
    """Synthetic function parameters violate the declared shape contract"""


class QueryCacheLoadError(AgencyError, ValueError):
    """A query-cache file could not be loaded"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DataLoadError(AgencyError, ValueError):
    """A dataset is missing a required column or cannot be parsed"""

    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super().__init__(message)


class ConfigError(AgencyError, ValueError):
    """A run configuration failed validation"""


class TerminalStateError(AgencyError, RuntimeError):
    """Actions were requested for a state where end(s) already holds"""


class IllegalActionError(AgencyError, RuntimeError):
    """An action is not legal at the given state"""

    def __init__(self, action, state, step: Optional[int] = None):
        self.action = action
        self.state = state
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"illegal action {action}{where} in state {state}")


class TransitionModelError(AgencyError, RuntimeError):
    """A transition model broke its outcome contract"""


class SearchBudgetExceeded(AgencyError, RuntimeError):
    """Exhaustive search hit its node cap before finishing"""

    def __init__(self, node_cap: int, nodes_expanded: int, depth_reached: int):
        self.node_cap = node_cap
        self.nodes_expanded = nodes_expanded
        self.depth_reached = depth_reached
        super().__init__(
            f"search exceeded node cap {node_cap} after expanding {nodes_expanded} nodes "
            f"(partial depth {depth_reached})"
        )


class InvalidBudgetError(AgencyError, ValueError):
    """A search budget is empty or malformed"""


class UnsupportedDomainError(AgencyError, ValueError):
    """An operation was asked to run on a domain it does not support"""
