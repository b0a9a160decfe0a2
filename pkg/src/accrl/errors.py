"""Exception hierarchy. Every failure the library raises derives from AccrlError."""


class AccrlError(Exception):
    pass


# accumulator

class UnsupportedBitLength(AccrlError, ValueError):
    pass


class PrimeGenerationTimeout(AccrlError):
    pass


class SearchExhausted(AccrlError):
    pass


class NonPrimeInput(AccrlError, ValueError):
    pass


class DuplicateRep(AccrlError, ValueError):
    pass


class NotAMember(AccrlError, ValueError):
    pass


class IsRevoked(AccrlError, ValueError):
    pass


class NotCoprime(AccrlError, ValueError):
    pass


# codecs

class FormatError(AccrlError, ValueError):
    """Malformed encoded input (CRL, payload or state file)."""


class BadMagic(FormatError):
    pass


class BadVersion(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class UnsortedEntries(FormatError):
    pass


class BadSignature(FormatError):
    pass


class CorruptState(FormatError):
    pass


# manager

class DeviceRevoked(AccrlError):
    pass


class BadCrlSignature(AccrlError):
    pass


class StaleDelta(AccrlError):
    pass


class DuplicateRevocation(AccrlError):
    pass


# simulator

class NotASquare(AccrlError, ValueError):
    pass
