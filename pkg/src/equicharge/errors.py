"""Exception hierarchy shared by every module."""


class EquichargeError(Exception):
    """Base class for all package errors."""


class UnknownNode(EquichargeError, LookupError):
    pass


class UnknownMode(EquichargeError, LookupError):
    pass


class Unreachable(EquichargeError):
    pass


class InvalidInput(EquichargeError, ValueError):
    """Raised when a domain object violates its construction invariants."""


class ParseError(InvalidInput):
    pass


class DegenerateInput(EquichargeError, ValueError):
    pass


class InconsistentSolution(EquichargeError):
    pass


class Infeasible(EquichargeError):
    pass


class GreedyStuck(Infeasible):
    pass


class SubsetLimitExceeded(EquichargeError):
    pass


class OracleSizeExceeded(EquichargeError):
    pass


class SweepMonotonicityError(EquichargeError):
    """A lambda sweep produced non-monotone trade-off terms (solver bug)."""


class NoReachableStation(EquichargeError):
    pass


class CapacityExhausted(EquichargeError):
    pass


class EmptyGroup(EquichargeError, ValueError):
    pass


class InsufficientData(EquichargeError, ValueError):
    pass
