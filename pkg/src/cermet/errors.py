"""Exception hierarchy shared by every cermet module."""


class CermetError(Exception):
    """Base class for all library errors."""


# -- field arithmetic --------------------------------------------------------

class FieldError(CermetError, ValueError):
    pass


class NotIrreducible(FieldError):
    pass


class NotPrimitive(FieldError):
    pass


class DivisionByZero(FieldError, ZeroDivisionError):
    pass


# -- secrecy code ------------------------------------------------------------

class CodeError(CermetError, ValueError):
    pass


class TooManyChannels(CodeError):
    pass


class DependentBasis(CodeError):
    pass


class Singular(CodeError):
    pass


class DimensionMismatch(CodeError):
    pass


# -- cipher suites -----------------------------------------------------------

class CipherError(CermetError):
    pass


class EntropyUnavailable(CipherError):
    pass


class NonceReuse(CipherError):
    pass


class SuiteMismatch(CipherError, ValueError):
    pass


class MalformedCiphertext(CipherError, ValueError):
    pass


class WeakSharedSecret(CipherError, ValueError):
    pass


class BadKeyFile(CipherError, ValueError):
    pass


# -- codec / transport -------------------------------------------------------

class CodecError(CermetError):
    pass


class Misaligned(CodecError, ValueError):
    pass


class MissingChannel(CodecError):
    def __init__(self, channels, batch_id=None):
        self.channels = tuple(sorted(channels))
        self.batch_id = batch_id
        where = "" if batch_id is None else f" in batch {batch_id}"
        names = ", ".join(str(c) for c in self.channels)
        super().__init__(f"missing channel {names}{where}")


class BatchIdMismatch(CodecError):
    pass


class BadPadding(CodecError, ValueError):
    pass


class FrameMismatch(CodecError):
    """A well-formed frame that does not belong to the configured session."""


class ReassemblyTimeout(CodecError, TimeoutError):
    pass


# -- wire format -------------------------------------------------------------

class FrameError(CermetError, ValueError):
    pass


class BadMagic(FrameError):
    pass


class UnsupportedVersion(FrameError):
    pass


class Truncated(FrameError):
    pass


class MalformedHeader(FrameError):
    pass


# -- audit / perf ------------------------------------------------------------

class TooLarge(CermetError, ValueError):
    pass


class ZeroThroughput(CermetError, ValueError):
    pass
