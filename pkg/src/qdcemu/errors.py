"""Exception hierarchy shared by all modules."""


class QdcError(Exception):
    """Base class for every error raised by qdcemu."""


# circuit IR
class CircuitError(QdcError):
    pass


class IndexOutOfRange(CircuitError, IndexError):
    pass


class NonUnitaryMatrix(CircuitError, ValueError):
    pass


class ConditionalOnUnwrittenBit(CircuitError):
    pass


class ClassicalBitRewritten(CircuitError):
    pass


class UnknownGateName(CircuitError, KeyError):
    pass


# engine
class DimensionMismatch(QdcError, ValueError):
    pass


class EmptyKeepSet(QdcError, ValueError):
    pass


class BadPauliString(QdcError, ValueError):
    pass


class NonTracePreservingSet(QdcError, ValueError):
    pass


# collision noise
class NegativeCoupling(QdcError, ValueError):
    pass


class NonPositiveAlpha(QdcError, ValueError):
    pass


class QubitRoleViolation(QdcError):
    pass


# topology
class TopologyError(QdcError):
    pass


class DisconnectedPartition(TopologyError):
    pass


class RoleAdjacencyViolation(TopologyError):
    pass


class CommQubitNotOnBoundary(TopologyError):
    pass


# protocols and algorithms
class ProtocolMismatch(QdcError):
    pass


class BadMarkedString(QdcError, ValueError):
    pass


class UnsupportedSize(QdcError, ValueError):
    pass


# tomography
class TooManyQubits(QdcError, ValueError):
    pass


class IncompleteData(QdcError):
    pass


# runner / export
class ConfigValidationError(QdcError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnsupportedInstruction(QdcError):
    pass
