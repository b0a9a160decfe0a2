import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accrl.accumulator import setup
from accrl.errors import UnsupportedBitLength
from accrl.numtheory import (
    MR_ROUNDS,
    egcd,
    is_probable_prime,
    modinv,
    mr_bases,
    prime_representative,
    random_prime,
    random_safe_prime,
    rep_from_nonce,
)
from conftest import load_params
from oracles import is_prime_mr, is_prime_trial, sq_mul, xgcd


def test_mr_bases_formula():
    n = (1 << 127) - 1
    nb = n.to_bytes(16, "big")
    expected = [2 + int.from_bytes(hashlib.sha256(nb + i.to_bytes(4, "big")).digest(), "big") % (n - 3)
                for i in range(3)]
    assert mr_bases(n, 3) == expected
    assert all(2 <= b <= n - 2 for b in mr_bases(n, MR_ROUNDS))


def test_is_probable_prime_small_range():
    for n in range(-3, 5000):
        assert is_probable_prime(n) == is_prime_trial(n), n


def test_is_probable_prime_known_values():
    assert is_probable_prime((1 << 521) - 1)  # Mersenne prime
    assert not is_probable_prime((1 << 523) - 1)
    assert not is_probable_prime(((1 << 127) - 1) * ((1 << 89) - 1))


def test_is_probable_prime_matches_oracle_on_random_512_bit():
    rng = random.Random(3)
    found = 0
    for _ in range(600):
        n = rng.getrandbits(512) | 1
        mine = is_probable_prime(n)
        assert mine == is_prime_mr(n)
        found += mine
    assert found > 0


@settings(max_examples=300)
@given(st.integers(-10**40, 10**40), st.integers(-10**40, 10**40))
def test_egcd_bezout(a, b):
    g, s, t = egcd(a, b)
    assert g >= 0
    assert s * a + t * b == g
    assert g == xgcd(abs(a), abs(b))[0]


@settings(max_examples=200)
@given(st.integers(1, 10**30), st.integers(2, 10**30))
def test_modinv(a, m):
    if xgcd(a, m)[0] != 1:
        with pytest.raises(ValueError):
            modinv(a, m)
    else:
        assert a * modinv(a, m) % m == 1


SERIAL = bytes(range(1, 21))
ISSUER = hashlib.sha256(b"issuer").digest()


def test_prime_representative_structure():
    rep = prime_representative(SERIAL, ISSUER)
    h = int.from_bytes(hashlib.sha256(SERIAL + ISSUER).digest(), "big")
    assert rep.y >> 256 == h
    assert rep.y == (h << 256) + rep.nonce_d
    assert rep.nonce_d % 2 == 1
    assert 2**510 < rep.y < 2**512
    assert is_prime_mr(rep.y)


def test_prime_representative_takes_first_prime():
    rep = prime_representative(SERIAL, ISSUER)
    base = rep.y - rep.nonce_d
    for d in range(1, rep.nonce_d, 2):
        assert not is_prime_mr(base + d), d


def test_prime_representative_deterministic_and_distinct():
    a = prime_representative(SERIAL, ISSUER)
    assert a == prime_representative(SERIAL, ISSUER)
    other = prime_representative(SERIAL[:-1] + b"\xff", ISSUER)
    assert other.y != a.y
    assert rep_from_nonce(SERIAL, ISSUER, a.nonce_d) == a
    assert a.identity == SERIAL + ISSUER
    assert int(a) == a.y


@pytest.mark.parametrize("serial,issuer", [(b"\x01" * 19, ISSUER), (SERIAL, ISSUER[:31]), (b"", b"")])
def test_prime_representative_widths(serial, issuer):
    with pytest.raises(ValueError):
        prime_representative(serial, issuer)


def test_random_prime():
    rng = random.Random(1)
    p = random_prime(256, rng)
    assert p.bit_length() == 256 and is_prime_mr(p)


def test_random_safe_prime_properties():
    rng = random.Random(2)
    for bits in (64, 256):
        p = random_safe_prime(bits, rng)
        assert p.bit_length() == bits
        assert p >> (bits - 2) == 0b11
        assert is_prime_mr(p) and is_prime_mr((p - 1) // 2)


@pytest.mark.parametrize("bits", [1024, 2048])
def test_fixture_params_are_well_formed(bits):
    params, secrets, seed = load_params(bits)
    p, q, n = secrets.p, secrets.q, params.modulus_n
    assert p != q and p * q == n and n.bit_length() == bits
    for s in (p, q):
        assert is_prime_mr(s, rounds=20) and is_prime_mr((s - 1) // 2, rounds=20)
    # g is a quadratic residue modulo both factors (Euler's criterion)
    g = params.base_g
    assert 1 < g < n
    assert sq_mul(g, (p - 1) // 2, p) == 1 and sq_mul(g, (q - 1) // 2, q) == 1
    assert is_prime_mr(secrets.r_k) and xgcd(secrets.r_k, secrets.totient)[0] == 1


def test_setup_reproducible_from_seed():
    params, secrets, seed = load_params(1024)
    assert setup(1024, "secure", seed) == (params, secrets)


def test_setup_test_mode_vector():
    params, secrets = setup(32, "test")
    assert (params.modulus_n, params.base_g) == (253, 4)
    assert (secrets.p, secrets.q, secrets.totient, secrets.r_k) == (11, 23, 220, 1)


@pytest.mark.parametrize("bits,mode", [(512, "secure"), (2048, "test"), (1000, "secure")])
def test_setup_rejects_bit_lengths(bits, mode):
    with pytest.raises(UnsupportedBitLength):
        setup(bits, mode)


def test_setup_rejects_mode():
    with pytest.raises(ValueError):
        setup(2048, "fast")
