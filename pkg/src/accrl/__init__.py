"""RSA-accumulator certificate revocation for constrained mesh networks.

A manager folds revoked certificates into one accumulator value and hands
each device a short signed proof that it is not in the set. Peers verify
each other with one modular equation instead of holding a CRL.

Big-integer, hash and Bloom kernels come from a compiled extension when it
is available and fall back to pure Python otherwise (see ``accrl._backend``).
"""
from ._backend import BACKEND
from .accumulator import (
    AccumulatorParams,
    AccumulatorValue,
    ManagerSecrets,
    MembershipWitness,
    NonRevokedProof,
    compute_acc,
    compute_membership_witness,
    compute_non_revoked_proof,
    compute_non_revoked_proofs,
    revocation_check,
    setup,
    update_acc,
    update_non_revoked_proof,
    verify_membership,
)
from .numtheory import PrimeRep, prime_representative

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AccumulatorParams",
    "AccumulatorValue",
    "ManagerSecrets",
    "MembershipWitness",
    "NonRevokedProof",
    "PrimeRep",
    "compute_acc",
    "compute_membership_witness",
    "compute_non_revoked_proof",
    "compute_non_revoked_proofs",
    "prime_representative",
    "revocation_check",
    "setup",
    "update_acc",
    "update_non_revoked_proof",
    "verify_membership",
]
