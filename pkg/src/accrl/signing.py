"""Ed25519 helpers shared by the manager, CRL codec and protocol."""
import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

_RAW = dict(encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw)


def generate_key():
    return Ed25519PrivateKey.generate()


def key_from_seed(seed, label=b""):
    """Deterministic key: the 32-byte private scalar seed is SHA-256(label || seed)."""
    if isinstance(seed, int):
        seed = seed.to_bytes(32, "big")
    return Ed25519PrivateKey.from_private_bytes(hashlib.sha256(bytes(label) + bytes(seed)).digest())


def private_bytes(key):
    return key.private_bytes(
        serialization.Encoding.Raw,
        serialization.PrivateFormat.Raw,
        serialization.NoEncryption(),
    )


def load_private(raw):
    return Ed25519PrivateKey.from_private_bytes(bytes(raw))


def public_bytes(key):
    if isinstance(key, Ed25519PrivateKey):
        key = key.public_key()
    return key.public_bytes(**_RAW)


def load_public(raw):
    if isinstance(raw, Ed25519PublicKey):
        return raw
    if isinstance(raw, Ed25519PrivateKey):
        return raw.public_key()
    return Ed25519PublicKey.from_public_bytes(bytes(raw))


def sign(key, message):
    return key.sign(bytes(message))


def verify(public_key, signature, message):
    """True iff ``signature`` is a valid Ed25519 signature; never raises on bad input."""
    try:
        load_public(public_key).verify(bytes(signature), bytes(message))
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True
