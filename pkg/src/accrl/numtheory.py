"""Primality, hash-to-prime and safe-prime generation."""
import hashlib
import math
from dataclasses import dataclass

from . import _backend
from .errors import PrimeGenerationTimeout, SearchExhausted

MR_ROUNDS = 40
SPOT_ROUNDS = 5
REP_BITS = 512
NONCE_BITS = 256


def _small_primes(limit):
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(sieve[i * i::i]))
    return [i for i, v in enumerate(sieve) if v]


SMALL_PRIMES = _small_primes(2000)
_PRIMORIAL = math.prod(SMALL_PRIMES)


def int_to_bytes(value, width=None):
    if width is None:
        width = max(1, (value.bit_length() + 7) // 8)
    return value.to_bytes(width, "big")


def mr_bases(n, rounds):
    """Deterministic Miller-Rabin bases for candidate ``n``.

    Base ``i`` is ``2 + SHA-256(n_be || i_u32_be) mod (n - 3)``, with ``n``
    encoded as minimal big-endian bytes.
    """
    nb = int_to_bytes(n)
    span = n - 3
    return [
        2 + int.from_bytes(hashlib.sha256(nb + i.to_bytes(4, "big")).digest(), "big") % span
        for i in range(rounds)
    ]


def is_probable_prime(n, rounds=MR_ROUNDS):
    """Trial division by small primes, then ``rounds`` Miller-Rabin rounds."""
    if n < 2:
        return False
    if n <= SMALL_PRIMES[-1]:
        return n in _SMALL_SET
    if math.gcd(n, _PRIMORIAL) != 1:
        return False
    bases = mr_bases(n, rounds)
    # One round first: nearly every composite dies here.
    if not _backend.miller_rabin(n, bases[:1]):
        return False
    return _backend.miller_rabin(n, bases[1:])


_SMALL_SET = frozenset(SMALL_PRIMES)


def egcd(a, b):
    """Extended Euclid: return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def modinv(a, m):
    g, s, _ = egcd(a % m, m)
    if g != 1:
        raise ValueError(f"{a} is not invertible modulo {m}")
    return s % m


# -- prime representatives --------------------------------------------------

@dataclass(frozen=True)
class PrimeRep:
    """512-bit prime standing in for one certificate identity.

    ``y = 2**256 * SHA-256(source_serial || issuer_key_hash) + nonce_d``.
    """

    y: int
    source_serial: bytes
    issuer_key_hash: bytes
    nonce_d: int

    @property
    def identity(self):
        return self.source_serial + self.issuer_key_hash

    def __int__(self):
        return self.y


def oracle_digest(serial, issuer_key_hash):
    return int.from_bytes(hashlib.sha256(bytes(serial) + bytes(issuer_key_hash)).digest(), "big")


def prime_representative(serial, issuer_key_hash):
    """Hash a certificate identity to its prime representative.

    The search walks ``d = 1, 3, 5, ...`` and keeps the first candidate
    that survives 40 Miller-Rabin rounds, so the result is a pure function
    of the two inputs.
    """
    serial = bytes(serial)
    issuer_key_hash = bytes(issuer_key_hash)
    if len(serial) != 20 or len(issuer_key_hash) != 32:
        raise ValueError("serial must be 20 bytes and issuer_key_hash 32 bytes")
    high = oracle_digest(serial, issuer_key_hash) << NONCE_BITS  # always even
    limit = 1 << NONCE_BITS
    d = 1
    while d < limit:
        y = high + d
        if is_probable_prime(y):
            return PrimeRep(y, serial, issuer_key_hash, d)
        d += 2
    raise SearchExhausted(serial.hex())


def rep_from_nonce(serial, issuer_key_hash, nonce_d):
    """Rebuild a PrimeRep from a stored nonce without repeating the search."""
    y = (oracle_digest(serial, issuer_key_hash) << NONCE_BITS) + nonce_d
    return PrimeRep(y, bytes(serial), bytes(issuer_key_hash), nonce_d)


# -- RSA modulus material ---------------------------------------------------

def random_prime(bits, rng, rounds=MR_ROUNDS, max_attempts=1_000_000):
    for _ in range(max_attempts):
        c = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(c, rounds):
            return c
    raise PrimeGenerationTimeout(f"no {bits}-bit prime after {max_attempts} candidates")


def random_safe_prime(bits, rng, rounds=MR_ROUNDS, max_windows=2000, window=4096):
    """Random ``p = 2q + 1`` with ``q`` prime and ``p`` exactly ``bits`` bits.

    The top two bits of ``p`` are set so a product of two such primes has
    exactly ``2 * bits`` bits. Candidates are sieved in windows against the
    small primes (both ``q`` and ``2q + 1``) before any modexp.
    """
    qbits = bits - 1
    primes = SMALL_PRIMES[1:]
    for _ in range(max_windows):
        q0 = rng.getrandbits(qbits) | (3 << (qbits - 2)) | 1
        # candidates q0 + 2j for j in [0, window)
        alive = bytearray([1]) * window
        for r in primes:
            q_mod = q0 % r
            inv2 = (r + 1) // 2
            for bad in (0, (r - 1) // 2):
                # q0 + 2j == bad (mod r)  =>  j == (bad - q0) * 2^-1 (mod r)
                j = (bad - q_mod) * inv2 % r
                alive[j::r] = bytes(len(range(j, window, r)))
        for j in range(window):
            if not alive[j]:
                continue
            q = q0 + 2 * j
            if q.bit_length() != qbits:
                break
            p = 2 * q + 1
            # cheap base-2 filter on both before the full rounds
            if _backend.powmod(2, q - 1, q) != 1 or _backend.powmod(2, p - 1, p) != 1:
                continue
            if is_probable_prime(q, rounds) and is_probable_prime(p, rounds):
                return p
    raise PrimeGenerationTimeout(f"no {bits}-bit safe prime after {max_windows} windows")
