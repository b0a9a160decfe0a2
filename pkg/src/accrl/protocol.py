"""Meter-side certificate verification.

A peer presents its (simplified) certificate, its non-revoked proof and a
signed request. Checks run in a fixed order and the first failure wins:

1. ``ProofSig``        proof signed by the accumulator manager
2. ``SerialMismatch``  proof serial equals certificate serial
3. ``LengthCheck``     nw1 / nw2 fit their k-bit fields and are normalised
4. ``EpochMismatch``   proof epoch equals the local accumulator epoch
5. ``RevocationCheck`` ``a ** nw1 == nw2 ** x * g (mod N)``
6. ``RequestSig``      request signed by the certificate's key
"""
import enum
from dataclasses import dataclass

from .accumulator import (
    REP_WIDTH,
    NonRevokedProof,
    proof_field_width,
    revocation_check,
)
from .baselines import mean_ms
from .signing import sign, verify


class Step(str, enum.Enum):
    PROOF_SIG = "ProofSig"
    SERIAL_MISMATCH = "SerialMismatch"
    LENGTH_CHECK = "LengthCheck"
    EPOCH_MISMATCH = "EpochMismatch"
    REVOCATION_CHECK = "RevocationCheck"
    REQUEST_SIG = "RequestSig"

    def __str__(self):
        return self.value


STEP_ORDER = tuple(Step)


@dataclass(frozen=True)
class PeerCertificate:
    serial: bytes
    issuer_key_hash: bytes
    public_key: bytes


@dataclass(frozen=True)
class VerificationRequest:
    peer_certificate: PeerCertificate
    peer_proof: NonRevokedProof
    request_body: bytes
    request_sig: bytes


@dataclass(frozen=True)
class VerificationOutcome:
    accepted: bool
    failed_step: Step = None

    def __post_init__(self):
        if self.accepted != (self.failed_step is None):
            raise ValueError("accepted iff no failed step")

    def __str__(self):
        return "accepted" if self.accepted else f"failed_step={self.failed_step}"


ACCEPTED = VerificationOutcome(True)


def make_request(certificate, proof, body, peer_key):
    """Build a request signed by ``peer_key`` (the peer's Ed25519 private key)."""
    return VerificationRequest(certificate, proof, bytes(body), sign(peer_key, body))


def _fields_fit(proof, params):
    width_bits = 8 * proof_field_width(params.bit_len_k)
    return (
        0 < proof.x < (1 << (8 * REP_WIDTH))
        and 0 <= proof.nw1 < proof.x
        and proof.nw1.bit_length() <= width_bits
        and 1 <= proof.nw2 < params.modulus_n
    )


def verify_peer(req, local_acc, params, manager_pubkey):
    """Run the verification steps in order; return the first failure, if any."""
    def fail(step):
        return VerificationOutcome(False, step)

    proof = getattr(req, "peer_proof", None)
    if not isinstance(proof, NonRevokedProof):
        return fail(Step.PROOF_SIG)
    try:
        signed_ok = proof.signature_valid(manager_pubkey, params.bit_len_k)
    except (TypeError, ValueError, AttributeError, OverflowError):
        signed_ok = False
    if not signed_ok:
        return fail(Step.PROOF_SIG)
    if bytes(proof.serial) != bytes(req.peer_certificate.serial):
        return fail(Step.SERIAL_MISMATCH)
    if not _fields_fit(proof, params):
        return fail(Step.LENGTH_CHECK)
    if proof.epoch != local_acc.epoch:
        return fail(Step.EPOCH_MISMATCH)
    # a degenerate local accumulator (0 or 1) would accept anything
    if local_acc.a < 2 or not revocation_check(proof, local_acc, params):
        return fail(Step.REVOCATION_CHECK)
    if not verify(req.peer_certificate.public_key, req.request_sig, req.request_body):
        return fail(Step.REQUEST_SIG)
    return ACCEPTED


def check_timing_bench(proof, acc, params, iterations=1000):
    """Mean milliseconds of one :func:`revocation_check`."""
    if iterations < 100:
        raise ValueError("iterations must be at least 100")
    return mean_ms(lambda: revocation_check(proof, acc, params), iterations)
