"""RSA accumulator over prime representatives of revoked certificates.

The accumulator value is ``a = g ** (r_k * prod(y)) mod N``. A device whose
prime ``x`` is not in the accumulated set carries a non-revoked proof
``(nw1, nw2)`` with ``a ** nw1 == nw2 ** x * g (mod N)``.

Every operation takes an optional :class:`ManagerSecrets`. With it, exponents
are reduced modulo ``phi(N)`` first (Euler); without it the same values are
computed by plain exponentiation, which is much slower but needs no trapdoor.
"""
import math
import random
import secrets as _secrets
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace

from . import _backend
from .errors import (
    DuplicateRep,
    IsRevoked,
    NonPrimeInput,
    NotAMember,
    NotCoprime,
    PrimeGenerationTimeout,
    UnsupportedBitLength,
)
from .numtheory import (
    SPOT_ROUNDS,
    PrimeRep,
    egcd,
    is_probable_prime,
    prime_representative,
    random_prime,
    random_safe_prime,
)
from .signing import sign, verify

__all__ = [
    "AccumulatorParams",
    "ManagerSecrets",
    "PrimeRep",
    "AccumulatorValue",
    "MembershipWitness",
    "BezoutPair",
    "NonRevokedProof",
    "setup",
    "prime_representative",
    "compute_acc",
    "compute_membership_witness",
    "verify_membership",
    "bezout_pair",
    "compute_non_revoked_proof",
    "compute_non_revoked_proofs",
    "revocation_check",
    "update_acc",
    "update_non_revoked_proof",
    "proof_field_width",
]

SECURE_BITS = (1024, 2048, 3072, 4096)
TEST_BITS = 32
REP_WIDTH = 64
SERIAL_LEN = 20
SIG_LEN = 64

# Fixed vector for test mode: hand-checkable arithmetic.
_TEST_P, _TEST_Q, _TEST_G = 11, 23, 4


@dataclass(frozen=True)
class AccumulatorParams:
    modulus_n: int
    base_g: int
    bit_len_k: int

    @property
    def byte_len(self):
        return (self.bit_len_k + 7) // 8


@dataclass(frozen=True)
class ManagerSecrets:
    """Trapdoor (factors and totient) plus the secret freshness prime ``r_k``."""

    p: int
    q: int
    totient: int
    r_k: int


@dataclass(frozen=True)
class AccumulatorValue:
    a: int
    epoch: int = 0


@dataclass(frozen=True)
class MembershipWitness:
    w: int
    for_y: int


@dataclass(frozen=True)
class BezoutPair:
    nw1_raw: int
    b: int


def proof_field_width(bit_len_k):
    """Byte width of the encoded ``nw1`` / ``nw2`` fields.

    ``k / 8`` for real moduli; never narrower than a 512-bit prime so that
    test-mode (k = 32) proofs for real prime representatives still encode.
    """
    return max(bit_len_k, 8 * REP_WIDTH) // 8


@dataclass(frozen=True)
class NonRevokedProof:
    serial: bytes
    x: int
    nw1: int
    nw2: int
    epoch: int
    signature: bytes = bytes(SIG_LEN)

    def signed_bytes(self, bit_len_k):
        """Canonical message covered by the manager signature.

        Fields are fixed width; an oversized value (never produced by an
        honest manager) is written at its natural width instead of failing.
        """
        w = proof_field_width(bit_len_k)
        return b"".join((
            _fit(self.serial, SERIAL_LEN),
            _int_fit(self.x, REP_WIDTH),
            _int_fit(self.nw1, w),
            _int_fit(self.nw2, w),
            _int_fit(self.epoch, 8),
        ))

    def to_bytes(self, bit_len_k):
        """Wire layout: serial(20) | x(64) | nw1(w) | nw2(w) | epoch(8) | signature(64)."""
        w = proof_field_width(bit_len_k)
        if len(self.serial) != SERIAL_LEN or len(self.signature) != SIG_LEN:
            raise ValueError("serial must be 20 bytes and signature 64 bytes")
        return b"".join((
            self.serial,
            self.x.to_bytes(REP_WIDTH, "big"),
            self.nw1.to_bytes(w, "big"),
            self.nw2.to_bytes(w, "big"),
            self.epoch.to_bytes(8, "big"),
            self.signature,
        ))

    @classmethod
    def wire_size(cls, bit_len_k):
        return SERIAL_LEN + REP_WIDTH + 2 * proof_field_width(bit_len_k) + 8 + SIG_LEN

    @classmethod
    def from_bytes(cls, data, bit_len_k):
        w = proof_field_width(bit_len_k)
        if len(data) != cls.wire_size(bit_len_k):
            raise ValueError(f"proof must be {cls.wire_size(bit_len_k)} bytes, got {len(data)}")
        data = bytes(data)
        o = SERIAL_LEN
        serial = data[:o]
        x = int.from_bytes(data[o:o + REP_WIDTH], "big")
        o += REP_WIDTH
        nw1 = int.from_bytes(data[o:o + w], "big")
        nw2 = int.from_bytes(data[o + w:o + 2 * w], "big")
        o += 2 * w
        epoch = int.from_bytes(data[o:o + 8], "big")
        return cls(serial, x, nw1, nw2, epoch, data[o + 8:])

    def signed(self, signer, bit_len_k):
        return replace(self, signature=sign(signer, self.signed_bytes(bit_len_k)))

    def signature_valid(self, public_key, bit_len_k):
        return verify(public_key, self.signature, self.signed_bytes(bit_len_k))


def _fit(b, width):
    return bytes(b).rjust(width, b"\x00")


def _int_fit(v, width):
    return v.to_bytes(max(width, (v.bit_length() + 7) // 8), "big")


# -- setup ------------------------------------------------------------------

def _rng(seed):
    if seed is None:
        return _secrets.SystemRandom()
    if isinstance(seed, int):
        seed = seed.to_bytes(32, "big")
    return random.Random(bytes(seed))


def setup(bit_len_k, mode="secure", seed=None, max_windows=2000):
    """Generate public parameters and manager secrets.

    ``mode="test"`` returns the fixed 32-bit vector ``N = 11 * 23 = 253``,
    ``g = 4`` and ``r_k = 1`` (freshness disabled) for hand-checkable tests.
    ``mode="secure"`` draws two distinct safe primes; ``seed`` (32 bytes or an
    int) makes it reproducible, otherwise the OS CSPRNG is used.
    """
    if mode == "test":
        if bit_len_k != TEST_BITS:
            raise UnsupportedBitLength(f"test mode supports only {TEST_BITS} bits")
        p, q = _TEST_P, _TEST_Q
        n = p * q
        return (
            AccumulatorParams(n, _TEST_G, TEST_BITS),
            ManagerSecrets(p, q, (p - 1) * (q - 1), 1),
        )
    if mode != "secure":
        raise ValueError(f"unknown mode {mode!r}")
    if bit_len_k not in SECURE_BITS:
        raise UnsupportedBitLength(f"{bit_len_k} not in {SECURE_BITS}")

    rng = _rng(seed)
    half = bit_len_k // 2
    p = random_safe_prime(half, rng, max_windows=max_windows)
    for _ in range(16):
        q = random_safe_prime(half, rng, max_windows=max_windows)
        if q != p:
            break
    else:
        raise PrimeGenerationTimeout("could not draw two distinct safe primes")
    n = p * q
    totient = (p - 1) * (q - 1)
    while True:
        s = rng.randrange(2, n - 1)
        if math.gcd(s, n) == 1:
            g = s * s % n
            if g > 1:
                break
    r_k = fresh_rk(totient, rng)
    return AccumulatorParams(n, g, bit_len_k), ManagerSecrets(p, q, totient, r_k)


def fresh_rk(totient, rng=None, bits=256):
    """Draw a new secret freshness prime coprime to ``totient``."""
    rng = rng or _secrets.SystemRandom()
    while True:
        r = random_prime(bits, rng)
        if 2 < r < totient and math.gcd(r, totient) == 1:
            return r


# -- helpers ----------------------------------------------------------------

def _y(v):
    return v.y if isinstance(v, PrimeRep) else int(v)


def _ys(reps):
    ys = [_y(r) for r in reps]
    if len(set(ys)) != len(ys):
        raise DuplicateRep("the same prime appears more than once")
    return ys


def _resolve_rk(r_k, secrets):
    if r_k is not None:
        return r_k
    if secrets is not None:
        return secrets.r_k
    raise TypeError("r_k is required when no ManagerSecrets are given")


def _pack(ys):
    """Concatenate 64-byte big-endian primes for the packed kernels (None if any is wider)."""
    if any(y.bit_length() > 8 * REP_WIDTH for y in ys):
        return None
    return b"".join(y.to_bytes(REP_WIDTH, "big") for y in ys)


def _prod_mod(ys, m):
    blob = _pack(ys)
    if blob is None:
        acc = 1 % m
        for y in ys:
            acc = acc * y % m
        return acc
    return _backend.prod_mod_packed(blob, REP_WIDTH, m)


def _product(ys):
    """Exact product via a balanced tree (keeps operands similar in size)."""
    ys = list(ys)
    if not ys:
        return 1
    while len(ys) > 1:
        nxt = [ys[i] * ys[i + 1] for i in range(0, len(ys) - 1, 2)]
        if len(ys) % 2:
            nxt.append(ys[-1])
        ys = nxt
    return ys[0]


def _powmod(base, exp, mod):
    """Modular power allowing a negative exponent (via the inverse of base)."""
    if exp < 0:
        base = pow(base, -1, mod)
        exp = -exp
    return _backend.powmod(base % mod, exp, mod)


def validate_reps(reps, rounds=SPOT_ROUNDS):
    """Spot-check that every element is a distinct probable prime."""
    ys = _ys(reps)
    for y in ys:
        if not is_probable_prime(y, rounds):
            raise NonPrimeInput(f"{y} is not prime")
    return ys


# -- accumulate / membership --------------------------------------------------

def compute_acc(reps, params, secrets=None, r_k=None, validate=True):
    """Accumulate ``reps`` into ``g ** (r_k * prod(y)) mod N`` at epoch 0."""
    r_k = _resolve_rk(r_k, secrets)
    ys = validate_reps(reps) if validate else _ys(reps)
    n, g = params.modulus_n, params.base_g
    if secrets is not None:
        e = r_k % secrets.totient * _prod_mod(ys, secrets.totient) % secrets.totient
        a = _backend.powmod(g, e, n)
    else:
        a = _backend.powmod(g, r_k, n)
        blob = _pack(ys)
        if blob is None:
            for y in ys:
                a = _backend.powmod(a, y, n)
        else:
            a = _backend.pow_chain_packed(a, blob, REP_WIDTH, n)
    return AccumulatorValue(a, 0)


def compute_membership_witness(target, reps, params, secrets=None, r_k=None):
    ty = _y(target)
    ys = _ys(reps)
    if ty not in ys:
        raise NotAMember(f"{ty} is not accumulated")
    rest = [y for y in ys if y != ty]
    acc = compute_acc(rest, params, secrets, r_k, validate=False)
    return MembershipWitness(acc.a, ty)


def verify_membership(witness, y, acc, params):
    w = witness.w if isinstance(witness, MembershipWitness) else int(witness)
    a = acc.a if isinstance(acc, AccumulatorValue) else int(acc)
    return _backend.powmod(w, _y(y), params.modulus_n) == a % params.modulus_n


# -- non-membership -----------------------------------------------------------

def bezout_pair(u, x):
    """Solve ``nw1_raw * u + b * x == 1`` by extended Euclid."""
    g, s, t = egcd(u, x)
    if g != 1:
        raise NotCoprime(f"gcd(u, {x}) = {g}")
    return BezoutPair(s, t)


class _RevokedSet:
    """Per-batch precomputation shared by every proof against one revoked set."""

    def __init__(self, ys, params, secrets, r_k):
        self.ys = ys
        self.members = frozenset(ys)
        self.params = params
        self.secrets = secrets
        self.r_k = r_k
        self.blob = _pack(ys)
        self.u_mod_phi = None
        self._u = None
        if secrets is not None:
            t = secrets.totient
            self.u_mod_phi = r_k % t * _prod_mod(ys, t) % t

    @property
    def u(self):
        if self._u is None:
            self._u = self.r_k * _product(self.ys)
        return self._u

    def u_mod(self, m):
        if self.blob is None:
            return self.r_k * _prod_mod(self.ys, m) % m
        return self.r_k % m * _backend.prod_mod_packed(self.blob, REP_WIDTH, m) % m

    def values(self, x):
        """``(nw1, nw2)`` for prime ``x`` not in the set."""
        if x in self.members:
            raise IsRevoked(f"{x} is accumulated")
        n, g = self.params.modulus_n, self.params.base_g
        u_x = self.u_mod(x)
        if math.gcd(u_x, x) != 1:
            raise NotCoprime(f"{x} shares a factor with the accumulated product")
        # nw1 is the Bezout coefficient of u normalised into [0, x).
        nw1 = pow(u_x, -1, x)
        # nw2 = g^(-b'), with -b' = (nw1*u - 1) / x exactly.
        s = self.secrets
        if s is not None and math.gcd(x, s.totient) == 1:
            e = (nw1 * self.u_mod_phi - 1) * pow(x, -1, s.totient) % s.totient
        else:
            num = nw1 * self.u - 1
            e, rem = divmod(num, x)
            if rem:
                raise NotCoprime("Bezout identity did not divide exactly")
            if s is not None:
                e %= s.totient
        return nw1, _powmod(g, e, n)


def compute_non_revoked_proof(x, revoked, params, secrets=None, r_k=None, signer=None,
                              epoch=0, serial=None):
    """Issue the signed non-revoked proof for ``x`` against ``revoked``."""
    r_k = _resolve_rk(r_k, secrets)
    ctx = _RevokedSet(_ys(revoked), params, secrets, r_k)
    return _issue(ctx, x, signer, epoch, serial)


def _issue(ctx, x, signer, epoch, serial):
    xv = _y(x)
    if serial is None:
        serial = x.source_serial if isinstance(x, PrimeRep) else bytes(SERIAL_LEN)
    nw1, nw2 = ctx.values(xv)
    proof = NonRevokedProof(bytes(serial), xv, nw1, nw2, epoch)
    if signer is not None:
        proof = proof.signed(signer, ctx.params.bit_len_k)
    return proof


def compute_non_revoked_proofs(xs, revoked, params, secrets=None, r_k=None, signer=None,
                               epoch=0, workers=1, executor="thread"):
    """Batch entry point: one proof per element of ``xs``, in input order.

    Items are independent, so any ``workers`` count gives identical output.
    ``executor="thread"`` scales across cores only with the native kernels
    (they release the GIL); ``"process"`` works with either backend.
    """
    r_k = _resolve_rk(r_k, secrets)
    xs = list(xs)
    ctx = _RevokedSet(_ys(revoked), params, secrets, r_k)
    if workers <= 1 or len(xs) <= 1:
        return [_issue(ctx, x, signer, epoch, None) for x in xs]
    if executor == "process":
        from .signing import private_bytes
        key = private_bytes(signer) if signer is not None else None
        chunks = [xs[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(
                _proof_chunk,
                [(c, ctx.ys, params, secrets, r_k, key, epoch) for c in chunks],
            ))
        out = [None] * len(xs)
        for i, part in enumerate(parts):
            out[i::workers] = part
        return out
    if executor != "thread":
        raise ValueError(f"unknown executor {executor!r}")
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda x: _issue(ctx, x, signer, epoch, None), xs))


def _proof_chunk(args):
    from .signing import load_private
    xs, ys, params, secrets, r_k, key, epoch = args
    signer = load_private(key) if key is not None else None
    ctx = _RevokedSet(ys, params, secrets, r_k)
    return [_issue(ctx, x, signer, epoch, None) for x in xs]


def revocation_check(proof, acc, params):
    """True iff ``a ** nw1 == nw2 ** x * g (mod N)``."""
    n = params.modulus_n
    a = acc.a if isinstance(acc, AccumulatorValue) else int(acc)
    lhs = _backend.powmod(a, proof.nw1, n)
    rhs = _backend.powmod(proof.nw2, proof.x, n) * params.base_g % n
    return lhs == rhs


# -- updates ------------------------------------------------------------------

def update_acc(acc, new_reps, params, secrets=None):
    """Fold newly revoked primes into ``acc``; the epoch advances by one."""
    ys = _ys(new_reps)
    n = params.modulus_n
    if secrets is not None:
        a = _backend.powmod(acc.a, _prod_mod(ys, secrets.totient), n)
    else:
        blob = _pack(ys)
        if blob is None:
            a = acc.a
            for y in ys:
                a = _backend.powmod(a, y, n)
        else:
            a = _backend.pow_chain_packed(acc.a, blob, REP_WIDTH, n)
    return AccumulatorValue(a, acc.epoch + 1)


def update_non_revoked_proof(x, old_revoked, new_reps, new_acc, params, secrets=None, r_k=None,
                             signer=None):
    """Reissue ``x``'s proof after ``new_reps`` were revoked.

    Recomputed from the full union; the result equals a fresh
    :func:`compute_non_revoked_proof` at ``new_acc.epoch``.
    """
    old = _ys(old_revoked)
    new = _ys(new_reps)
    if set(old) & set(new):
        raise DuplicateRep("new primes overlap the accumulated set")
    return compute_non_revoked_proof(x, old + new, params, secrets, r_k, signer,
                                     epoch=new_acc.epoch)
