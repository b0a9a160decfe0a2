"""Comparison methods: a local copy of the CRL and a MurmurHash3 Bloom filter.

Also the storage accounting used to compare all three approaches.
"""
import bisect
import csv
import io
import math
import time
from dataclasses import dataclass

from . import _backend
from .accumulator import NonRevokedProof
from .crl import concat_identity, encoded_size

DEFAULT_BLOOM_HASHES = 3


# -- local CRL ----------------------------------------------------------------

class LocalCrlStore:
    """Sorted, duplicate-free index of ``issuer_key_hash || serial`` keys."""

    def __init__(self, keys=()):
        self._keys = sorted(set(keys))

    @classmethod
    def from_crl(cls, crl):
        store = cls()
        store.apply(crl)
        return store

    def apply(self, crl):
        """Merge a full or delta CRL into the index."""
        new = {bytes(e.issuer_key_hash) + bytes(e.serial) for e in crl.entries}
        self._keys = sorted(new.union(self._keys))

    def __len__(self):
        return len(self._keys)

    def __contains__(self, key):
        i = bisect.bisect_left(self._keys, key)
        return i < len(self._keys) and self._keys[i] == key


def crl_lookup(store, serial, issuer_key_hash):
    return (bytes(issuer_key_hash) + bytes(serial)) in store


# -- Bloom filter -------------------------------------------------------------

def bloom_params(n, fpr, hash_count=DEFAULT_BLOOM_HASHES):
    """Return ``(m_bits, k_hashes)`` for ``n`` items at target false-positive rate.

    With ``hash_count=None`` both are optimised together
    (``m = -n ln p / ln(2)^2``, ``k = round(m/n ln 2)``). With a fixed hash
    count ``k``, ``m`` is the smallest size meeting the target exactly:
    ``m = -k n / ln(1 - p^(1/k))``.
    """
    if not 0 < fpr < 1:
        raise ValueError("fpr must be in (0, 1)")
    n = max(n, 1)
    if hash_count is None:
        m = math.ceil(-n * math.log(fpr) / math.log(2) ** 2)
        k = max(1, round(m / n * math.log(2)))
    else:
        k = hash_count
        m = math.ceil(-k * n / math.log(1 - fpr ** (1 / k)))
    return m, k


def analytic_fpr(n, m, k):
    return (1 - math.exp(-k * n / m)) ** k


@dataclass
class BloomFilterStore:
    bits: bytearray
    m: int
    k: int
    n: int = 0

    def __post_init__(self):
        if self.m <= 0 or self.k < 1:
            raise ValueError("m must be positive and k at least 1")

    @classmethod
    def empty(cls, m_bits, k_hashes):
        return cls(bytearray((m_bits + 7) // 8), m_bits, k_hashes)

    def add(self, item):
        _backend.bloom_insert(self.bits, self.m, self.k, bytes(item))
        self.n += 1

    def __contains__(self, item):
        return _backend.bloom_contains(self.bits, self.m, self.k, item)

    def count_hits(self, items):
        return _backend.bloom_count_hits(self.bits, self.m, self.k, items)

    @property
    def size_bytes(self):
        return len(self.bits)


def bloom_build(entries, m_bits, k_hashes):
    """Build a filter. ``entries`` are byte identities or ``RevokedEntry`` objects."""
    store = BloomFilterStore.empty(m_bits, k_hashes)
    for e in entries:
        store.add(e if isinstance(e, (bytes, bytearray)) else concat_identity(e))
    return store


def bloom_from_crl(crl, fpr=0.01, hash_count=DEFAULT_BLOOM_HASHES):
    m, k = bloom_params(len(crl.entries), fpr, hash_count)
    return bloom_build(crl.entries, m, k)


def bloom_query(store, item):
    return bytes(item) in store


# -- storage ------------------------------------------------------------------

def accumulator_device_bytes(bit_len_k):
    """What one device stores: the accumulator value plus its own proof."""
    return (bit_len_k + 7) // 8 + NonRevokedProof.wire_size(bit_len_k)


def storage_report(crl_size_entries, k_bits=2048, bloom_target_fpr=0.01,
                   hash_count=DEFAULT_BLOOM_HASHES):
    """Per-device storage, in bytes, for each method at a given CRL size."""
    m, _ = bloom_params(crl_size_entries, bloom_target_fpr, hash_count)
    return [
        ("crl", crl_size_entries, encoded_size(crl_size_entries)),
        ("bloom", crl_size_entries, (m + 7) // 8),
        ("accumulator", crl_size_entries, accumulator_device_bytes(k_bits)),
    ]


def rows_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def storage_csv(rows):
    return rows_to_csv(("method", "entries", "bytes"), rows)


# -- timing -------------------------------------------------------------------

def mean_ms(fn, iterations):
    """Mean wall-clock milliseconds of ``fn()`` over ``iterations`` calls."""
    fn()
    t0 = time.perf_counter()
    for _ in range(iterations):
        fn()
    return (time.perf_counter() - t0) / iterations * 1e3
