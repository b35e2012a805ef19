class VeilError(Exception):
    """Base class for every error raised by the lab."""


class UsageError(VeilError):
    pass


# circuit
class CircuitError(VeilError):
    pass


class InputArityError(CircuitError):
    pass


class UnknownGadgetError(CircuitError):
    pass


class UnsupportedWidthError(CircuitError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# garble
class GarbleError(VeilError):
    pass


class DecryptionFailureError(GarbleError):
    pass


class UnknownLabelError(GarbleError):
    pass


class GarbledFormatError(GarbleError):
    pass


# transport
class TransportError(VeilError):
    pass


class ClosedChannelError(TransportError):
    pass


class ChannelTimeoutError(TransportError):
    pass


class DeadlockError(TransportError):
    def __init__(self, blocked: list):
        super().__init__(f"deadlock, blocked parties: {', '.join(str(p) for p in blocked)}")
        self.blocked = blocked


class SessionAbortedError(TransportError):
    pass


# chain
class ChainError(VeilError):
    pass


class ConsensusFailureError(ChainError):
    def __init__(self, message: str, dissenting: list):
        super().__init__(f"{message}; dissenting nodes: {', '.join(str(n) for n in dissenting) or 'none'}")
        self.dissenting = dissenting


class InsufficientGasError(ChainError):
    pass


class OracleDecryptionError(ChainError):
    pass


class InvalidTransitionError(ChainError):
    pass


class LedgerIntegrityError(ChainError):
    pass


# protocols
class ProtocolError(VeilError):
    pass


class EngineDisagreementError(ProtocolError):
    pass


class MissingPartyError(ProtocolError):
    pass


class PivotDecryptionError(ProtocolError):
    pass


class IndexOutOfSetError(ProtocolError):
    pass


# preprocessing
class PreprocError(VeilError):
    pass


class MacCheckError(PreprocError):
    pass


class IncompleteCoverError(PreprocError):
    pass


class InfeasibleCoverError(PreprocError):
    pass


# verification
class VerificationError(VeilError):
    pass


class MiniLangSyntaxError(VerificationError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnknownVariableError(VerificationError):
    pass


class AnnotationSemanticError(VerificationError):
    pass


class UnboundedLoopError(VerificationError):
    pass


class PackageFormatError(VerificationError):
    pass


class VerificationFailedError(VerificationError):
    def __init__(self, reasons: list[str]):
        super().__init__(f"verification-failed: {', '.join(reasons) or 'unspecified'}")
        self.reasons = reasons


class DomainError(VeilError, ValueError):
    pass
