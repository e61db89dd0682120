"""Exception hierarchy shared by all gridminor modules."""


class GridMinorError(Exception):
    """Base class for all library errors."""


class GraphError(GridMinorError):
    pass


class EmptyClusterError(GraphError):
    pass


class UnknownVertexError(GraphError):
    pass


class PreconditionError(GridMinorError):
    """An operation's documented precondition does not hold."""


class ExactModeSizeExceeded(PreconditionError):
    pass


class ProfileRefused(PreconditionError):
    """Strict profile rejected the input; names the first violated inequality."""

    def __init__(self, inequality: str):
        super().__init__(f"strict profile refuses input: violated {inequality}")
        self.inequality = inequality


class RetriesExhausted(GridMinorError):
    pass


class MatchingNotPerfect(GridMinorError):
    pass


class MalformedBundle(GridMinorError):
    pass


class NotLinkedError(PreconditionError):
    pass


class HeightExhausted(GridMinorError):
    def __init__(self, msg, achieved_ratio=None):
        super().__init__(msg)
        self.achieved_ratio = achieved_ratio


class ReserveExhausted(GridMinorError):
    """Invariant breach in the path-of-sets assembly bookkeeping (diagnostic)."""


class InsufficientWidth(GridMinorError):
    pass


class CutTooLarge(PreconditionError):
    pass


class InterfaceTooLarge(PreconditionError):
    pass


class NotGoodClustering(PreconditionError):
    pass


class NotViolating(PreconditionError):
    pass


class NoAdmissibleSplit(GridMinorError):
    """Mader split found no admissible neighbor pair: bug trap, should be
    precluded by edge doubling."""


class ConnectivityPreconditionFailed(PreconditionError):
    pass


class GuaranteeViolated(GridMinorError):
    """Diagnostic: a caller-asserted certificate turned out to be false."""


class LinkednessViolation(GridMinorError):
    """Diagnostic: a flow that strongness guarantees was infeasible."""


class NoDegree3Tree(GridMinorError):
    """Diagnostic: contradicts the capacity bounds verified on entry."""


class ParseError(GridMinorError):
    pass
