from ccm.const import ARITY_ERROR_MSG, CYCLE_ERROR_MSG, HILL_DOMAIN_ERROR_MSG, INTERVENTION_ERROR_MSG
from ccm.exceptions import CcmError


class GraphSpecError(CcmError):
    """Raised when a graph specification is malformed."""

    pass


class CycleError(GraphSpecError):
    """Raised when the edge relation of a graph is not acyclic."""

    def __init__(self, message: str = CYCLE_ERROR_MSG):
        super().__init__(message)


class ArityError(GraphSpecError):
    """Raised when a structural equation disagrees with the node's parent count."""

    def __init__(self, message: str = ARITY_ERROR_MSG):
        super().__init__(message)


class InterventionError(CcmError):
    """Raised when a do-intervention targets a node that is not modifiable."""

    def __init__(self, message: str = INTERVENTION_ERROR_MSG):
        super().__init__(message)


class DomainError(CcmError):
    """Raised when a function is evaluated outside of its domain."""

    def __init__(self, message: str = HILL_DOMAIN_ERROR_MSG):
        super().__init__(message)
