"""Accumulator manager: ingest CRLs, keep the accumulated set, issue payloads.

State files (``.amgr``) and payload files (``.apay``) are bit-exact,
big-endian and versioned. State ends with the SHA-256 of everything before
it. Manager secrets, when present, are stored in plain text and flagged.
"""
import hashlib
import logging
import struct
from dataclasses import dataclass, field, replace

from .accumulator import (
    SECURE_BITS,
    TEST_BITS,
    AccumulatorParams,
    AccumulatorValue,
    ManagerSecrets,
    NonRevokedProof,
    compute_acc,
    compute_non_revoked_proofs,
    fresh_rk,
    revocation_check,
    setup,
    update_acc,
)
from .crl import CrlKind, concat_identity, crl_digest, verify_crl
from .errors import (
    BadCrlSignature,
    BadMagic,
    BadVersion,
    CorruptState,
    DeviceRevoked,
    DuplicateRevocation,
    FormatError,
    StaleDelta,
    TruncatedFile,
)
from .numtheory import prime_representative, rep_from_nonce
from .signing import generate_key, key_from_seed, load_private, private_bytes, public_bytes, sign, verify

log = logging.getLogger(__name__)

STATE_MAGIC = b"AMGR"
PAYLOAD_MAGIC = b"APAY"
FORMAT_VERSION = 1
FLAG_PLAINTEXT_SECRETS = 0x01


@dataclass(frozen=True)
class Device:
    serial: bytes
    issuer_key_hash: bytes


@dataclass(frozen=True)
class DistributionPayload:
    params: AccumulatorParams
    acc: AccumulatorValue
    proofs: tuple
    manager_public_key: bytes
    manager_sig: bytes

    def signed_bytes(self):
        return _acc_bytes(self.params, self.acc)

    def signature_valid(self, public_key=None):
        return verify(public_key or self.manager_public_key, self.manager_sig, self.signed_bytes())

    def for_device(self, serial):
        """Unicast view: the same accumulator with just this device's proof."""
        proofs = tuple(p for p in self.proofs if p.serial == bytes(serial))
        if not proofs:
            raise KeyError(serial.hex())
        return replace(self, proofs=proofs)

    def proof_for(self, serial):
        return self.for_device(serial).proofs[0]


@dataclass(frozen=True)
class ManagerState:
    params: AccumulatorParams
    secrets: ManagerSecrets
    r_k: int
    accumulated: tuple
    acc: AccumulatorValue
    device_registry: dict
    signing_key: bytes
    ca_public_key: bytes
    epoch_log: tuple = ()
    audit_log: tuple = ()
    _members: frozenset = field(default=None, compare=False, repr=False)

    @property
    def members(self):
        if self._members is None:
            object.__setattr__(self, "_members", frozenset(r.y for r in self.accumulated))
        return self._members

    @property
    def signer(self):
        return load_private(self.signing_key)

    @property
    def manager_public_key(self):
        return public_bytes(self.signer)

    def without_secrets(self):
        """Trapdoorless copy: factors and totient dropped, ``r_k`` kept."""
        return replace(self, secrets=None)


def _acc_bytes(params, acc):
    return acc.a.to_bytes(params.byte_len, "big") + acc.epoch.to_bytes(8, "big")


def _payload(state, proofs):
    signer = state.signer
    return DistributionPayload(
        state.params,
        state.acc,
        tuple(proofs),
        public_bytes(signer),
        sign(signer, _acc_bytes(state.params, state.acc)),
    )


def _check_state(state):
    if state.secrets is None:
        return
    expected = compute_acc(state.accumulated, state.params, state.secrets, state.r_k, validate=False)
    assert expected.a == state.acc.a, "accumulator out of sync with accumulated set"
    assert not state.members.intersection(r.y for r in state.device_registry.values())


def _reps_for(entries, members=None, workers=1):
    reps = []
    for e in entries:
        reps.append(prime_representative(e.serial, e.issuer_key_hash))
    return reps


def setup_phase(full_crl, devices, bit_len_k=2048, mode="secure", seed=None, ca_public_key=None,
                keys=None, manager_key=None, workers=1):
    """Accumulate a full CRL and issue one proof per registered device.

    ``keys`` may carry a pre-generated ``(params, secrets)`` pair to skip
    modulus generation. Returns ``(state, payload)`` at epoch 0.
    """
    if full_crl.kind != CrlKind.FULL:
        raise ValueError("setup needs a full CRL")
    if ca_public_key is not None and not verify_crl(full_crl, ca_public_key):
        raise BadCrlSignature("full CRL signature does not verify")
    devices = [d if isinstance(d, Device) else Device(bytes(d[0]), bytes(d[1])) for d in devices]
    revoked_ids = set(full_crl.identities())
    for d in devices:
        if d.serial + d.issuer_key_hash in revoked_ids:
            raise DeviceRevoked(d.serial.hex())

    if keys is None:
        keys = setup(bit_len_k, mode, seed)
    params, secrets = keys
    if manager_key is None:
        manager_key = key_from_seed(seed, b"accrl-manager") if seed is not None else generate_key()

    accumulated = tuple(_reps_for(full_crl.entries))
    registry = {}
    for d in devices:
        registry[d.serial] = prime_representative(d.serial, d.issuer_key_hash)
    acc = compute_acc(accumulated, params, secrets, secrets.r_k, validate=False)
    state = ManagerState(
        params=params,
        secrets=secrets,
        r_k=secrets.r_k,
        accumulated=accumulated,
        acc=acc,
        device_registry=registry,
        signing_key=private_bytes(manager_key),
        ca_public_key=bytes(ca_public_key) if ca_public_key is not None else bytes(32),
        epoch_log=((0, crl_digest(full_crl)),),
    )
    if __debug__:
        _check_state(state)
    return state, _payload(state, _issue_all(state, workers))


def _issue_all(state, workers=1):
    return compute_non_revoked_proofs(
        list(state.device_registry.values()),
        state.accumulated,
        state.params,
        state.secrets,
        state.r_k,
        state.signer,
        epoch=state.acc.epoch,
        workers=workers,
    )


def update_phase(state, delta, ca_public_key=None, workers=1):
    """Fold a delta CRL into the accumulator and reissue every surviving proof."""
    if delta.kind != CrlKind.DELTA:
        raise ValueError("update needs a delta CRL")
    if delta.base_epoch != state.acc.epoch:
        raise StaleDelta(f"delta extends epoch {delta.base_epoch}, state is at {state.acc.epoch}")
    key = ca_public_key if ca_public_key is not None else state.ca_public_key
    if any(key) and not verify_crl(delta, key):
        raise BadCrlSignature("delta CRL signature does not verify")
    new = _reps_for(delta.entries)
    members = state.members
    for r in new:
        if r.y in members:
            raise DuplicateRevocation(r.source_serial.hex())
    acc = update_acc(state.acc, new, state.params, state.secrets)

    revoked_now = {concat_identity(e) for e in delta.entries}
    registry = {}
    audit = list(state.audit_log)
    for serial, rep in state.device_registry.items():
        if rep.identity in revoked_now:
            audit.append(f"epoch {acc.epoch}: device {serial.hex()} revoked, removed from registry")
            log.info("device %s revoked at epoch %d", serial.hex(), acc.epoch)
            continue
        registry[serial] = rep

    new_state = replace(
        state,
        accumulated=state.accumulated + tuple(new),
        acc=acc,
        device_registry=registry,
        epoch_log=state.epoch_log + ((acc.epoch, crl_digest(delta)),),
        audit_log=tuple(audit),
        _members=None,
    )
    if __debug__:
        _check_state(new_state)
    return new_state, _payload(new_state, _issue_all(new_state, workers))


def recover(state, seed=None, bit_len_k=None, mode="secure", keys=None, manager_key=None):
    """Rebuild from scratch with a fresh modulus and a fresh ``r_k``.

    The accumulated set and device registry carry over; the epoch restarts
    one past the old one so stale payloads are rejected.
    """
    bit_len_k = bit_len_k or state.params.bit_len_k
    if keys is None:
        keys = setup(bit_len_k, mode, seed)
    params, secrets = keys
    if mode != "test":
        secrets = replace(secrets, r_k=fresh_rk(secrets.totient))
    acc = compute_acc(state.accumulated, params, secrets, secrets.r_k, validate=False)
    acc = AccumulatorValue(acc.a, state.acc.epoch + 1)
    new_state = replace(
        state,
        params=params,
        secrets=secrets,
        r_k=secrets.r_k,
        acc=acc,
        signing_key=private_bytes(manager_key) if manager_key is not None else state.signing_key,
        epoch_log=state.epoch_log + ((acc.epoch, bytes(32)),),
        audit_log=state.audit_log + (f"epoch {acc.epoch}: full re-setup",),
        _members=None,
    )
    return new_state, _payload(new_state, _issue_all(new_state))


def payload_verifies(payload):
    """Every proof is at the payload epoch and passes the revocation check."""
    return all(
        p.epoch == payload.acc.epoch and revocation_check(p, payload.acc, payload.params)
        for p in payload.proofs
    )


# -- binary codecs ------------------------------------------------------------

class _Writer:
    def __init__(self):
        self.parts = []

    def raw(self, b):
        self.parts.append(bytes(b))

    def u8(self, v):
        self.parts.append(struct.pack(">B", v))

    def u16(self, v):
        self.parts.append(struct.pack(">H", v))

    def u32(self, v):
        self.parts.append(struct.pack(">I", v))

    def u64(self, v):
        self.parts.append(struct.pack(">Q", v))

    def big(self, v):
        b = v.to_bytes((v.bit_length() + 7) // 8, "big")
        self.u32(len(b))
        self.raw(b)

    def blob(self, b):
        self.u32(len(b))
        self.raw(b)

    def getvalue(self):
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def raw(self, n):
        if n < 0 or self.pos + n > len(self.data):
            raise TruncatedFile(f"need {n} bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return self.raw(1)[0]

    def u16(self):
        return struct.unpack(">H", self.raw(2))[0]

    def u32(self):
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self):
        return struct.unpack(">Q", self.raw(8))[0]

    def big(self):
        return int.from_bytes(self.raw(self.u32()), "big")

    def blob(self):
        return self.raw(self.u32())

    def done(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes")


def _check_k(k):
    if k not in SECURE_BITS and k != TEST_BITS:
        raise FormatError(f"unsupported modulus length {k}")


def encode_payload(payload):
    """``.apay``: APAY | ver u8 | k u16 | N | g | a (k/8 each) | epoch u64 |
    manager_pub(32) | count u32 | proofs | manager_sig(64)."""
    p = payload.params
    w = _Writer()
    w.raw(PAYLOAD_MAGIC)
    w.u8(FORMAT_VERSION)
    w.u16(p.bit_len_k)
    for v in (p.modulus_n, p.base_g, payload.acc.a):
        w.raw(v.to_bytes(p.byte_len, "big"))
    w.u64(payload.acc.epoch)
    w.raw(payload.manager_public_key)
    w.u32(len(payload.proofs))
    for proof in payload.proofs:
        w.raw(proof.to_bytes(p.bit_len_k))
    w.raw(payload.manager_sig)
    return w.getvalue()


def decode_payload(data):
    data = bytes(data)
    if data[:4] != PAYLOAD_MAGIC:
        raise BadMagic("not an APAY file")
    r = _Reader(data)
    r.raw(4)
    if r.u8() != FORMAT_VERSION:
        raise BadVersion("unsupported payload version")
    k = r.u16()
    _check_k(k)
    nb = (k + 7) // 8
    n, g, a = (int.from_bytes(r.raw(nb), "big") for _ in range(3))
    epoch = r.u64()
    pub = r.raw(32)
    count = r.u32()
    size = NonRevokedProof.wire_size(k)
    if count * size + 64 != len(data) - r.pos:
        raise TruncatedFile(f"{count} proofs do not fit the remaining {len(data) - r.pos} bytes")
    proofs = tuple(NonRevokedProof.from_bytes(r.raw(size), k) for _ in range(count))
    sig = r.raw(64)
    r.done()
    return DistributionPayload(AccumulatorParams(n, g, k), AccumulatorValue(a, epoch), proofs, pub, sig)


def _write_rep(w, rep):
    w.raw(rep.source_serial)
    w.raw(rep.issuer_key_hash)
    w.raw(rep.nonce_d.to_bytes(32, "big"))


def _read_rep(r):
    return rep_from_nonce(r.raw(20), r.raw(32), int.from_bytes(r.raw(32), "big"))


def persist(state):
    w = _Writer()
    w.raw(STATE_MAGIC)
    w.u8(FORMAT_VERSION)
    w.u8(FLAG_PLAINTEXT_SECRETS if state.secrets is not None else 0)
    p = state.params
    w.u16(p.bit_len_k)
    w.big(p.modulus_n)
    w.big(p.base_g)
    w.big(state.r_k)
    if state.secrets is not None:
        for v in (state.secrets.p, state.secrets.q, state.secrets.totient):
            w.big(v)
    w.big(state.acc.a)
    w.u64(state.acc.epoch)
    w.raw(state.signing_key)
    w.raw(state.ca_public_key)
    w.u32(len(state.accumulated))
    for rep in state.accumulated:
        _write_rep(w, rep)
    w.u32(len(state.device_registry))
    for rep in state.device_registry.values():
        _write_rep(w, rep)
    w.u32(len(state.epoch_log))
    for epoch, digest in state.epoch_log:
        w.u64(epoch)
        w.raw(digest)
    w.u32(len(state.audit_log))
    for line in state.audit_log:
        w.blob(line.encode("utf-8"))
    body = w.getvalue()
    return body + hashlib.sha256(body).digest()


def restore(data):
    data = bytes(data)
    if len(data) < 36 or hashlib.sha256(data[:-32]).digest() != data[-32:]:
        raise CorruptState("state digest mismatch")
    try:
        return _restore(data[:-32])
    except CorruptState:
        raise
    except (FormatError, ValueError, UnicodeDecodeError) as exc:
        raise CorruptState(str(exc)) from exc


def _restore(body):
    r = _Reader(body)
    if r.raw(4) != STATE_MAGIC:
        raise BadMagic("not an AMGR file")
    if r.u8() != FORMAT_VERSION:
        raise BadVersion("unsupported state version")
    flags = r.u8()
    k = r.u16()
    _check_k(k)
    params = AccumulatorParams(r.big(), r.big(), k)
    r_k = r.big()
    secrets = None
    if flags & FLAG_PLAINTEXT_SECRETS:
        p, q, t = r.big(), r.big(), r.big()
        secrets = ManagerSecrets(p, q, t, r_k)
    acc = AccumulatorValue(r.big(), r.u64())
    signing_key = r.raw(32)
    ca = r.raw(32)
    accumulated = tuple(_read_rep(r) for _ in range(r.u32()))
    registry = {}
    for _ in range(r.u32()):
        rep = _read_rep(r)
        registry[rep.source_serial] = rep
    epoch_log = tuple((r.u64(), r.raw(32)) for _ in range(r.u32()))
    audit = tuple(r.blob().decode("utf-8") for _ in range(r.u32()))
    r.done()
    return ManagerState(params, secrets, r_k, accumulated, acc, registry, signing_key, ca,
                        epoch_log, audit)
