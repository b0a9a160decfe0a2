# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""GMP-backed kernels for the hot loops.

Big-integer work releases the GIL, so batch proof generation can use
threads. Every function here has a drop-in twin in ``_pure``.
"""
from libc.stdint cimport uint8_t, uint64_t

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]

    void mpz_init(mpz_t) nogil
    void mpz_clear(mpz_t) nogil
    void mpz_set(mpz_t, const mpz_t) nogil
    void mpz_set_ui(mpz_t, unsigned long) nogil
    void mpz_import(mpz_t, size_t, int, size_t, int, size_t, const void *) nogil
    void *mpz_export(void *, size_t *, int, size_t, int, size_t, const mpz_t) nogil
    size_t mpz_sizeinbase(const mpz_t, int) nogil
    void mpz_powm(mpz_t, const mpz_t, const mpz_t, const mpz_t) nogil
    void mpz_mul(mpz_t, const mpz_t, const mpz_t) nogil
    void mpz_mod(mpz_t, const mpz_t, const mpz_t) nogil
    void mpz_sub_ui(mpz_t, const mpz_t, unsigned long) nogil
    int mpz_cmp(const mpz_t, const mpz_t) nogil
    int mpz_cmp_ui(const mpz_t, unsigned long) nogil
    unsigned long mpz_scan1(const mpz_t, unsigned long) nogil
    void mpz_tdiv_q_2exp(mpz_t, const mpz_t, unsigned long) nogil


cdef int _load(mpz_t r, object v) except -1:
    if v < 0:
        raise ValueError("negative operand")
    cdef bytes b = int(v).to_bytes((v.bit_length() + 7) // 8 or 1, "big")
    cdef const char *p = b
    mpz_import(r, len(b), 1, 1, 1, 0, p)
    return 0


cdef object _store(mpz_t r):
    cdef size_t n = (mpz_sizeinbase(r, 2) + 7) // 8
    cdef size_t count = 0
    cdef bytearray buf = bytearray(n)
    cdef char *p = buf
    mpz_export(p, &count, 1, 1, 1, 0, r)
    return int.from_bytes(buf[:count], "big")


def powmod(base, exp, mod):
    """``base ** exp % mod`` for non-negative ``exp`` and ``mod > 0``."""
    cdef mpz_t b, e, m, r
    mpz_init(b); mpz_init(e); mpz_init(m); mpz_init(r)
    try:
        _load(b, base); _load(e, exp); _load(m, mod)
        with nogil:
            mpz_powm(r, b, e, m)
        return _store(r)
    finally:
        mpz_clear(b); mpz_clear(e); mpz_clear(m); mpz_clear(r)


def prod_mod_packed(const uint8_t[:] blob, size_t width, mod):
    """Product of the fixed-width big-endian integers in ``blob``, mod ``mod``."""
    cdef size_t count = blob.shape[0] // width
    cdef size_t i
    cdef mpz_t acc, y, m
    mpz_init(acc); mpz_init(y); mpz_init(m)
    try:
        _load(m, mod)
        mpz_set_ui(acc, 1)
        mpz_mod(acc, acc, m)
        if count:
            with nogil:
                for i in range(count):
                    mpz_import(y, width, 1, 1, 1, 0, &blob[i * width])
                    mpz_mul(acc, acc, y)
                    mpz_mod(acc, acc, m)
        return _store(acc)
    finally:
        mpz_clear(acc); mpz_clear(y); mpz_clear(m)


def pow_chain_packed(base, const uint8_t[:] blob, size_t width, mod):
    """Iterated exponentiation ``a <- a ** y mod m`` over each packed ``y``."""
    cdef size_t count = blob.shape[0] // width
    cdef size_t i
    cdef mpz_t acc, y, m
    mpz_init(acc); mpz_init(y); mpz_init(m)
    try:
        _load(acc, base); _load(m, mod)
        mpz_mod(acc, acc, m)
        if count:
            with nogil:
                for i in range(count):
                    mpz_import(y, width, 1, 1, 1, 0, &blob[i * width])
                    mpz_powm(acc, acc, y, m)
        return _store(acc)
    finally:
        mpz_clear(acc); mpz_clear(y); mpz_clear(m)


cdef inline void _square_mod(mpz_t x, mpz_t n) nogil:
    mpz_mul(x, x, x)
    mpz_mod(x, x, n)


def miller_rabin(n, bases):
    """Strong-probable-prime test of odd ``n > 3`` against every base given."""
    cdef mpz_t nn, d, nm1, a, x
    cdef unsigned long s, j
    cdef bint ok = True
    cdef bint witness
    mpz_init(nn); mpz_init(d); mpz_init(nm1); mpz_init(a); mpz_init(x)
    try:
        _load(nn, n)
        mpz_sub_ui(nm1, nn, 1)
        s = mpz_scan1(nm1, 0)
        mpz_tdiv_q_2exp(d, nm1, s)
        for base in bases:
            _load(a, base)
            with nogil:
                mpz_powm(x, a, d, nn)
                witness = True
                if mpz_cmp_ui(x, 1) == 0 or mpz_cmp(x, nm1) == 0:
                    witness = False
                else:
                    for j in range(1, s):
                        _square_mod(x, nn)
                        if mpz_cmp(x, nm1) == 0:
                            witness = False
                            break
            if witness:
                ok = False
                break
        return ok
    finally:
        mpz_clear(nn); mpz_clear(d); mpz_clear(nm1); mpz_clear(a); mpz_clear(x)


# MurmurHash3 x64_128 (Austin Appleby, public domain reference).

cdef inline uint64_t _rotl(uint64_t x, int r) nogil:
    return (x << r) | (x >> (64 - r))


cdef inline uint64_t _fmix(uint64_t k) nogil:
    k ^= k >> 33
    k *= 0xff51afd7ed558ccdULL
    k ^= k >> 33
    k *= 0xc4ceb9fe1a85ec53ULL
    k ^= k >> 33
    return k


cdef inline uint64_t _le64(const uint8_t *p) nogil:
    cdef uint64_t v = 0
    cdef int i
    for i in range(7, -1, -1):
        v = (v << 8) | p[i]
    return v


cdef void _murmur(const uint8_t *data, size_t length, uint64_t seed,
                  uint64_t *out1, uint64_t *out2) nogil:
    cdef size_t nblocks = length // 16
    cdef uint64_t h1 = seed, h2 = seed, k1, k2
    cdef uint64_t c1 = 0x87c37b91114253d5ULL
    cdef uint64_t c2 = 0x4cf5ad432745937fULL
    cdef size_t i
    cdef const uint8_t *tail
    cdef size_t rem
    for i in range(nblocks):
        k1 = _le64(data + i * 16)
        k2 = _le64(data + i * 16 + 8)
        k1 *= c1; k1 = _rotl(k1, 31); k1 *= c2; h1 ^= k1
        h1 = _rotl(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729
        k2 *= c2; k2 = _rotl(k2, 33); k2 *= c1; h2 ^= k2
        h2 = _rotl(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5
    tail = data + nblocks * 16
    rem = length & 15
    k1 = 0
    k2 = 0
    if rem > 8:
        for i in range(rem - 1, 7, -1):
            k2 = (k2 << 8) | tail[i]
        k2 *= c2; k2 = _rotl(k2, 33); k2 *= c1; h2 ^= k2
    if rem > 0:
        for i in range((rem if rem < 8 else 8) - 1, -1, -1):
            k1 = (k1 << 8) | tail[i]
        k1 *= c1; k1 = _rotl(k1, 31); k1 *= c2; h1 ^= k1
    h1 ^= length; h2 ^= length
    h1 += h2; h2 += h1
    h1 = _fmix(h1); h2 = _fmix(h2)
    h1 += h2; h2 += h1
    out1[0] = h1
    out2[0] = h2


def murmur3_x64_128(const uint8_t[:] data, uint64_t seed=0):
    """128-bit hash as an int, ``h1 | h2 << 64`` (little-endian digest order)."""
    cdef uint64_t h1, h2
    cdef const uint8_t *p = &data[0] if data.shape[0] else <const uint8_t *>b""
    _murmur(p, data.shape[0], seed & 0xffffffffULL, &h1, &h2)
    return (<object>h2 << 64) | h1


cdef inline uint64_t _index(const uint8_t *p, size_t n, uint64_t seed, uint64_t m) nogil:
    cdef uint64_t h1, h2
    _murmur(p, n, seed, &h1, &h2)
    return <uint64_t>((((<u128>h2) << 64) | h1) % m)


def bloom_insert(uint8_t[:] bits, uint64_t m, int k, const uint8_t[:] key):
    cdef int i
    cdef uint64_t j
    cdef const uint8_t *p = &key[0] if key.shape[0] else <const uint8_t *>b""
    for i in range(k):
        j = _index(p, key.shape[0], i, m)
        bits[j >> 3] |= <uint8_t>(1 << (j & 7))


def bloom_contains(const uint8_t[:] bits, uint64_t m, int k, const uint8_t[:] key):
    cdef int i
    cdef uint64_t j
    cdef const uint8_t *p = &key[0] if key.shape[0] else <const uint8_t *>b""
    for i in range(k):
        j = _index(p, key.shape[0], i, m)
        if not (bits[j >> 3] >> (j & 7)) & 1:
            return False
    return True


def bloom_count_hits(const uint8_t[:] bits, uint64_t m, int k, keys):
    """Number of ``keys`` the filter reports as present."""
    cdef size_t hits = 0
    cdef int i
    cdef uint64_t j
    cdef bint present
    cdef const uint8_t[:] key
    cdef const uint8_t *p
    for obj in keys:
        key = obj
        p = &key[0] if key.shape[0] else <const uint8_t *>b""
        present = True
        for i in range(k):
            j = _index(p, key.shape[0], i, m)
            if not (bits[j >> 3] >> (j & 7)) & 1:
                present = False
                break
        hits += present
    return hits
