from enum import IntEnum


class SplitDenoiseError(Exception):
    """
    To be raised wherever an exception is required.
    """

    prefix = "splitdenoise error"

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"{self.prefix}: {self.message}"


class ConfigError(SplitDenoiseError):
    """
    To be raised when a configuration file or flag cannot be used.
    """

    prefix = "Invalid configuration"


class ContractError(SplitDenoiseError):
    """
    To be raised when a caller breaks an operation's precondition.
    """

    prefix = "Contract violated"


class DimensionError(ContractError):
    """
    To be raised when operand shapes do not agree.
    """

    prefix = "Dimension mismatch"


class DegenerateMaskError(ContractError):
    """
    To be raised when an attention mask leaves no valid position.
    """

    prefix = "Degenerate attention mask"


class EmptyInputError(ContractError):
    """
    To be raised when a sequence, batch, or corpus is empty.
    """

    prefix = "Empty input"


class TokenRangeError(ContractError):
    """
    To be raised when a token id falls outside the vocabulary.
    """

    prefix = "Token id out of range"


class EmptyVocabularyError(ContractError):
    """
    To be raised when a vocabulary table has no rows.
    """

    prefix = "Empty vocabulary"


class PrivacyParameterError(ContractError):
    """
    To be raised when a privacy parameter is outside its domain.
    """

    prefix = "Invalid privacy parameter"


class UndefinedBoundError(ContractError):
    """
    To be raised when a privacy bound has no finite value.
    """

    prefix = "Undefined bound"


class DomainError(ContractError):
    """
    To be raised when a special function is evaluated outside its domain.
    """

    prefix = "Argument outside domain"


class DegenerateDistanceError(ContractError):
    """
    To be raised when duplicate points make a nearest-neighbor distance zero.
    """

    prefix = "Degenerate distance"


class SingleClassError(ContractError):
    """
    To be raised when a classifier is asked to learn from one class only.
    """

    prefix = "Training labels contain a single class"


class NonFiniteError(SplitDenoiseError):
    """
    To be raised when a numeric operation produces NaN or Inf.
    """

    prefix = "Non-finite value"


class DivergenceError(NonFiniteError):
    """
    To be raised when a training loss stops being finite.
    """

    prefix = "Training diverged"


class NoDenoiserError(SplitDenoiseError):
    """
    To be raised when no denoiser partition covers the requested η.
    """

    prefix = "No denoiser for privacy level"


class CheckpointError(SplitDenoiseError):
    """
    To be raised when a weight checkpoint or manifest cannot be read.
    """

    prefix = "Invalid checkpoint"


class TransportError(SplitDenoiseError):
    """
    To be raised when bytes cannot be moved between client and server.
    """

    prefix = "Transport failure"


class ServerError(SplitDenoiseError):
    """
    To be raised when the server answers with an Error frame.
    """

    prefix = "The embedding server responded with an error"


class FrameErrorCode(IntEnum):
    """Codes carried by Error frames and frame exceptions."""

    BAD_MAGIC = 1
    VERSION_MISMATCH = 2
    CRC_MISMATCH = 3
    TRUNCATED = 4
    UNKNOWN_MESSAGE = 5
    SEQUENCE_TOO_LONG = 6
    DIMENSION_MISMATCH = 7
    INTERNAL = 8


class FrameError(SplitDenoiseError):
    """
    To be raised when a frame cannot be encoded, decoded, or served.
    """

    prefix = "Malformed frame"
    code = FrameErrorCode.INTERNAL

    def __str__(self) -> str:
        return f"{self.prefix} ({self.code.name}): {self.message}"


class BadMagicError(FrameError):
    """The frame does not start with the protocol magic."""

    code = FrameErrorCode.BAD_MAGIC


class VersionMismatchError(FrameError):
    """The frame carries an unsupported protocol version."""

    code = FrameErrorCode.VERSION_MISMATCH


class CrcMismatchError(FrameError):
    """The frame checksum does not validate."""

    code = FrameErrorCode.CRC_MISMATCH


class TruncatedFrameError(FrameError):
    """The frame length does not match its header."""

    code = FrameErrorCode.TRUNCATED


class UnknownMessageError(FrameError):
    """The frame carries a message type the receiver does not handle."""

    code = FrameErrorCode.UNKNOWN_MESSAGE


class SequenceTooLongError(FrameError):
    """The request carries more tokens than the server accepts."""

    code = FrameErrorCode.SEQUENCE_TOO_LONG


class FrameDimensionError(FrameError):
    """The request width does not match the served model."""

    code = FrameErrorCode.DIMENSION_MISMATCH
