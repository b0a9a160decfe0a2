"""Signed full / delta CRLs in a fixed-width binary layout (``.acrl``).

Layout, all integers big-endian::

    "ACRL" | version u8 | kind u8 | base_epoch u64 | this_update u64
    | next_update u64 | count u32 | count * entry | signature(64)

    entry = serial(20) | revoked_at u64 | issuer_key_hash(32)

The signature is Ed25519 by the issuing CA over every preceding byte.
"""
import enum
import hashlib
import struct
import zlib
from dataclasses import dataclass, field, replace

from .errors import (
    BadMagic,
    BadSignature,
    BadVersion,
    DuplicateRevocation,
    FormatError,
    TruncatedFile,
    UnsortedEntries,
)
from .signing import sign, verify

MAGIC = b"ACRL"
VERSION = 1
HEADER = struct.Struct(">4sBBQQQI")
ENTRY = struct.Struct(">20sQ32s")
SIG_LEN = 64
HEADER_SIZE = HEADER.size
ENTRY_SIZE = ENTRY.size
EMPTY_SIZE = HEADER_SIZE + SIG_LEN

# Synthetic corpus clock: a fixed instant, never wall time.
SYNTHETIC_EPOCH_TIME = 1_700_000_000
WEEK = 7 * 24 * 3600


class CrlKind(enum.IntEnum):
    FULL = 0
    DELTA = 1


@dataclass(frozen=True)
class RevokedEntry:
    serial: bytes
    revoked_at: int
    issuer_key_hash: bytes

    def __post_init__(self):
        if len(self.serial) != 20 or len(self.issuer_key_hash) != 32:
            raise ValueError("serial is 20 bytes, issuer_key_hash 32 bytes")
        if not any(self.serial):
            raise ValueError("serial must be nonzero")
        if self.revoked_at <= 0:
            raise ValueError("revoked_at must be positive")

    @property
    def sort_key(self):
        return self.issuer_key_hash, self.serial


def concat_identity(entry):
    """``serial || issuer_key_hash``: the 52-byte preimage of a prime representative."""
    return bytes(entry.serial) + bytes(entry.issuer_key_hash)


@dataclass(frozen=True)
class CrlFile:
    kind: CrlKind
    base_epoch: int
    this_update: int
    next_update: int
    entries: tuple = ()
    signature: bytes = field(default=bytes(SIG_LEN), repr=False)

    def __post_init__(self):
        _check_invariants(self)

    def __len__(self):
        return len(self.entries)

    def tbs_bytes(self):
        """Bytes covered by the signature (everything but the signature)."""
        parts = [HEADER.pack(MAGIC, VERSION, int(self.kind), self.base_epoch,
                             self.this_update, self.next_update, len(self.entries))]
        parts.extend(ENTRY.pack(e.serial, e.revoked_at, e.issuer_key_hash) for e in self.entries)
        return b"".join(parts)

    def identities(self):
        return [concat_identity(e) for e in self.entries]


def _check_invariants(crl):
    if crl.this_update >= crl.next_update:
        raise ValueError("this_update must precede next_update")
    prev = None
    for e in crl.entries:
        key = e.sort_key
        if prev is not None and key <= prev:
            raise UnsortedEntries("entries must be strictly ascending by (issuer_key_hash, serial)")
        prev = key


def sign_crl(crl, signer):
    return replace(crl, signature=sign(signer, crl.tbs_bytes()))


def encode_crl(crl):
    if len(crl.signature) != SIG_LEN:
        raise ValueError("signature must be 64 bytes")
    return crl.tbs_bytes() + bytes(crl.signature)


def decode_crl(data, ca_public_key=None):
    """Parse an ``.acrl`` blob; verify the signature when a CA key is given.

    Raises a :class:`~accrl.errors.FormatError` subclass on any malformed
    input and nothing else.
    """
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not an ACRL file")
    if len(data) < HEADER_SIZE:
        raise TruncatedFile("header truncated")
    _, version, kind, base_epoch, this_update, next_update, count = HEADER.unpack_from(data)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        kind = CrlKind(kind)
    except ValueError:
        raise FormatError(f"unknown CRL kind {kind}") from None
    expected = HEADER_SIZE + count * ENTRY_SIZE + SIG_LEN
    if len(data) < expected:
        raise TruncatedFile(f"expected {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes")
    if this_update >= next_update:
        raise FormatError("this_update must precede next_update")
    entries = []
    prev = None
    for i in range(count):
        serial, revoked_at, issuer = ENTRY.unpack_from(data, HEADER_SIZE + i * ENTRY_SIZE)
        try:
            entry = RevokedEntry(serial, revoked_at, issuer)
        except ValueError as exc:
            raise FormatError(f"entry {i}: {exc}") from None
        if prev is not None and entry.sort_key <= prev:
            raise UnsortedEntries(f"entry {i} out of order")
        prev = entry.sort_key
        entries.append(entry)
    signature = data[expected - SIG_LEN:]
    crl = CrlFile(kind, base_epoch, this_update, next_update, tuple(entries), signature)
    if ca_public_key is not None and not verify(ca_public_key, signature, data[:-SIG_LEN]):
        raise BadSignature("CRL signature does not verify")
    return crl


def verify_crl(crl, ca_public_key):
    return verify(ca_public_key, crl.signature, crl.tbs_bytes())


def crl_digest(crl):
    return hashlib.sha256(encode_crl(crl)).digest()


def encoded_size(count):
    """Size in bytes of an encoded CRL with ``count`` entries."""
    return HEADER_SIZE + count * ENTRY_SIZE + SIG_LEN


def wire_size(crl, level=9):
    """Bytes on the wire when the file is shipped zlib-compressed."""
    return len(zlib.compress(encode_crl(crl), level))


def make_crl(entries, kind=CrlKind.FULL, base_epoch=0, this_update=SYNTHETIC_EPOCH_TIME,
             next_update=None, signer=None):
    """Build a CRL from unsorted entries; duplicates are rejected."""
    entries = sorted(entries, key=lambda e: e.sort_key)
    for a, b in zip(entries, entries[1:]):
        if a.sort_key == b.sort_key:
            raise DuplicateRevocation(f"duplicate entry {a.serial.hex()}")
    crl = CrlFile(CrlKind(kind), base_epoch, this_update,
                  next_update if next_update is not None else this_update + WEEK, tuple(entries))
    return sign_crl(crl, signer) if signer is not None else crl


def merge(full, delta):
    """Apply a delta to a full CRL. Overlapping entries are an error."""
    if full.kind != CrlKind.FULL or delta.kind != CrlKind.DELTA:
        raise ValueError("merge expects (full, delta)")
    seen = {e.sort_key for e in full.entries}
    for e in delta.entries:
        if e.sort_key in seen:
            raise DuplicateRevocation(f"{e.serial.hex()} already in the base CRL")
    return make_crl(full.entries + delta.entries, CrlKind.FULL, 0,
                    max(full.this_update, delta.this_update),
                    max(full.next_update, delta.next_update))


# -- synthetic corpus -------------------------------------------------------

class _Stream:
    """SHAKE-256 keystream: deterministic bytes from a seed and a label."""

    def __init__(self, seed, label):
        self._xof = hashlib.shake_256(bytes(seed) + b"|" + label)
        self._buf = b""
        self._pos = 0
        self._len = 0

    def take(self, n):
        if self._pos + n > len(self._buf):
            self._len = max(2 * self._len, self._pos + n, 1 << 16)
            self._buf = self._xof.digest(self._len)
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out


def _seed_bytes(seed):
    if isinstance(seed, int):
        return seed.to_bytes(32, "big")
    return bytes(seed)


def synthetic_issuers(seed, count=4):
    """Key hashes of the synthetic issuing CAs."""
    seed = _seed_bytes(seed)
    return [hashlib.sha256(b"accrl-ca|" + seed + bytes([i])).digest() for i in range(count)]


def generate_synthetic_crl(count, kind=CrlKind.FULL, seed=bytes(32), signer=None, base_epoch=0,
                           exclude=(), issuers=None):
    """Deterministic pseudo-random CRL of ``count`` entries.

    Serials are 16 random bytes left-padded to 20 (typical CA practice),
    issuers come from a small pool and revocation times fall within the
    year before the fixed synthetic clock. ``exclude`` lists identities
    (``serial || issuer``) that must not appear, e.g. a delta's base.
    """
    seed = _seed_bytes(seed)
    kind = CrlKind(kind)
    issuers = issuers or synthetic_issuers(seed)
    stream = _Stream(seed, b"crl|%d|%d|%d" % (int(kind), base_epoch, count))
    excluded = set(exclude)
    seen = set()
    entries = []
    year = 365 * 24 * 3600
    while len(entries) < count:
        raw = stream.take(16 + 2 + 4)
        serial = b"\x00" * 4 + raw[:16]
        if not any(serial):
            continue
        issuer = issuers[int.from_bytes(raw[16:18], "big") % len(issuers)]
        ident = serial + issuer
        if ident in seen or ident in excluded:
            continue
        seen.add(ident)
        revoked_at = SYNTHETIC_EPOCH_TIME - 1 - int.from_bytes(raw[18:22], "big") % year
        entries.append(RevokedEntry(serial, revoked_at, issuer))
    this_update = SYNTHETIC_EPOCH_TIME + base_epoch * WEEK
    return make_crl(entries, kind, base_epoch, this_update, this_update + WEEK, signer)
