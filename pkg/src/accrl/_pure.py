"""Pure-Python kernels; same signatures and results as ``_native``."""

_M64 = (1 << 64) - 1
_C1 = 0x87C37B91114253D5
_C2 = 0x4CF5AD432745937F


def powmod(base, exp, mod):
    if exp < 0 or base < 0:
        raise ValueError("negative operand")
    return pow(base, exp, mod)


def prod_mod_packed(blob, width, mod):
    acc = 1 % mod
    blob = bytes(blob)
    for i in range(0, len(blob) - width + 1, width):
        acc = acc * int.from_bytes(blob[i:i + width], "big") % mod
    return acc


def pow_chain_packed(base, blob, width, mod):
    acc = base % mod
    blob = bytes(blob)
    for i in range(0, len(blob) - width + 1, width):
        acc = pow(acc, int.from_bytes(blob[i:i + width], "big"), mod)
    return acc


def miller_rabin(n, bases):
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _rotl(x, r):
    return ((x << r) | (x >> (64 - r))) & _M64


def _fmix(k):
    k ^= k >> 33
    k = (k * 0xFF51AFD7ED558CCD) & _M64
    k ^= k >> 33
    k = (k * 0xC4CEB9FE1A85EC53) & _M64
    k ^= k >> 33
    return k


def murmur3_x64_128(data, seed=0):
    data = bytes(data)
    length = len(data)
    h1 = h2 = seed & 0xFFFFFFFF
    nblocks = length // 16
    for i in range(nblocks):
        k1 = int.from_bytes(data[16 * i:16 * i + 8], "little")
        k2 = int.from_bytes(data[16 * i + 8:16 * i + 16], "little")
        k1 = (_rotl((k1 * _C1) & _M64, 31) * _C2) & _M64
        h1 ^= k1
        h1 = (((_rotl(h1, 27) + h2) & _M64) * 5 + 0x52DCE729) & _M64
        k2 = (_rotl((k2 * _C2) & _M64, 33) * _C1) & _M64
        h2 ^= k2
        h2 = (((_rotl(h2, 31) + h1) & _M64) * 5 + 0x38495AB5) & _M64
    tail = data[16 * nblocks:]
    if len(tail) > 8:
        k2 = int.from_bytes(tail[8:], "little")
        h2 ^= (_rotl((k2 * _C2) & _M64, 33) * _C1) & _M64
    if tail:
        k1 = int.from_bytes(tail[:8], "little")
        h1 ^= (_rotl((k1 * _C1) & _M64, 31) * _C2) & _M64
    h1 ^= length
    h2 ^= length
    h1 = (h1 + h2) & _M64
    h2 = (h2 + h1) & _M64
    h1 = _fmix(h1)
    h2 = _fmix(h2)
    h1 = (h1 + h2) & _M64
    h2 = (h2 + h1) & _M64
    return (h2 << 64) | h1


def bloom_insert(bits, m, k, key):
    for i in range(k):
        j = murmur3_x64_128(key, i) % m
        bits[j >> 3] |= 1 << (j & 7)


def bloom_contains(bits, m, k, key):
    for i in range(k):
        j = murmur3_x64_128(key, i) % m
        if not (bits[j >> 3] >> (j & 7)) & 1:
            return False
    return True


def bloom_count_hits(bits, m, k, keys):
    return sum(1 for key in keys if bloom_contains(bits, m, k, key))
