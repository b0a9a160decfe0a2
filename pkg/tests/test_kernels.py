import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accrl import _backend, _pure
from oracles import is_prime_trial, smhasher_verification, sq_mul

BACKENDS = [_backend.load(name) for name in _backend.available()]
IDS = _backend.available()

# SMHasher's published verification value for MurmurHash3_x64_128
SMHASHER_X64_128 = 0x6384BA69


@pytest.fixture(params=BACKENDS, ids=IDS)
def k(request):
    return request.param


def test_smhasher_verification_value(k):
    assert smhasher_verification(k.murmur3_x64_128) == SMHASHER_X64_128


def test_murmur_empty_input_seed_zero(k):
    # all-zero state stays zero through fmix
    assert k.murmur3_x64_128(b"", 0) == 0


def test_powmod_against_square_and_multiply(k):
    rng = random.Random(5)
    for bits in (8, 64, 521, 2048):
        n = rng.getrandbits(bits) | 1 | (1 << (bits - 1))
        for _ in range(5):
            b, e = rng.getrandbits(bits + 7), rng.getrandbits(600)
            assert k.powmod(b, e, n) == sq_mul(b, e, n)


def test_powmod_edge_cases(k):
    assert k.powmod(5, 0, 7) == 1
    assert k.powmod(0, 5, 7) == 0
    assert k.powmod(3, 4, 1) == 0


def test_powmod_rejects_negative(k):
    with pytest.raises((ValueError, OverflowError)):
        k.powmod(3, -1, 7)


def test_packed_kernels(k):
    rng = random.Random(9)
    n = rng.getrandbits(1024) | 1
    ys = [rng.getrandbits(512) for _ in range(17)]
    blob = b"".join(y.to_bytes(64, "big") for y in ys)
    prod = 1
    a = 4
    for y in ys:
        prod = prod * y % n
        a = sq_mul(a, y, n)
    assert k.prod_mod_packed(blob, 64, n) == prod
    assert k.pow_chain_packed(4, blob, 64, n) == a
    assert k.prod_mod_packed(b"", 64, n) == 1


def test_miller_rabin_small_numbers(k):
    for n in range(5, 3000, 2):
        bases = [b for b in (2, 3, 5, 7, 11, 13) if b < n - 1] or [2]
        assert k.miller_rabin(n, bases) == is_prime_trial(n), n


def test_miller_rabin_carmichael(k):
    for n in (561, 1105, 1729, 2465, 2821, 6601, 8911):
        assert not k.miller_rabin(n, [2, 3, 5, 7])


def test_bloom_no_false_negatives(k):
    m, kh = 10007, 3
    bits = bytearray((m + 7) // 8)
    keys = [i.to_bytes(8, "big") for i in range(500)]
    for key in keys:
        k.bloom_insert(bits, m, kh, key)
    assert all(k.bloom_contains(bits, m, kh, key) for key in keys)
    assert k.bloom_count_hits(bits, m, kh, keys) == len(keys)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="native extension not built")
@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=100), st.integers(0, 2**32 - 1))
def test_native_matches_python_murmur(data, seed):
    native = _backend.load("native")
    assert native.murmur3_x64_128(data, seed) == _pure.murmur3_x64_128(data, seed)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="native extension not built")
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**700), st.integers(0, 2**600), st.integers(1, 2**700))
def test_native_matches_python_powmod(b, e, n):
    native = _backend.load("native")
    assert native.powmod(b, e, n) == _pure.powmod(b, e, n)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="native extension not built")
def test_native_bloom_bits_identical():
    native = _backend.load("native")
    m, kh = 4099, 4
    a, b = bytearray((m + 7) // 8), bytearray((m + 7) // 8)
    for i in range(300):
        key = i.to_bytes(4, "little") * 3
        native.bloom_insert(a, m, kh, key)
        _pure.bloom_insert(b, m, kh, key)
    assert a == b


def test_backend_selection():
    assert _backend.BACKEND in ("native", "python")
    assert "python" in _backend.available()
    with pytest.raises(ValueError):
        _backend.load("fortran")
