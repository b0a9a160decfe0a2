"""Desk-scale benchmarks: manager compute cost, per-check latency, kernel speed.

All functions return rows ready for :func:`accrl.baselines.rows_to_csv`.
"""
import functools
import os
import random
import time

from . import _backend
from .accumulator import (
    compute_acc,
    compute_non_revoked_proof,
    compute_non_revoked_proofs,
    revocation_check,
    setup,
)
from .baselines import LocalCrlStore, bloom_from_crl, crl_lookup, mean_ms
from .crl import generate_synthetic_crl
from .numtheory import prime_representative
from .signing import key_from_seed

COMPUTE_HEADER = ("phase", "bits", "size", "trapdoor", "threads", "seconds")
CHECK_HEADER = ("method", "bits", "entries", "iterations", "mean_ms")
KERNEL_HEADER = ("kernel", "backend", "iterations", "mean_us")


@functools.lru_cache(maxsize=8)
def cached_setup(bits, seed=0):
    """Keys are deterministic in ``seed``; memoised because safe primes are slow."""
    return setup(bits, "secure", seed)


def _reps(count, seed):
    crl = generate_synthetic_crl(count, seed=seed)
    return [prime_representative(e.serial, e.issuer_key_hash) for e in crl.entries]


def _device_reps(count, seed):
    rng = random.Random(seed ^ 0x5EED)
    issuer = bytes(rng.getrandbits(8) for _ in range(32))
    return [prime_representative(b"\x01" + rng.randbytes(19), issuer) for _ in range(count)]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return time.perf_counter() - t0, out


def time_accumulate(reps, params, secrets, trapdoor=True):
    """Seconds to accumulate ``reps`` with or without the trapdoor."""
    if trapdoor:
        return _timed(lambda: compute_acc(reps, params, secrets, validate=False))
    return _timed(lambda: compute_acc(reps, params, None, secrets.r_k, validate=False))


def time_proofs(devices, revoked, params, secrets, trapdoor=True, threads=1):
    s = secrets if trapdoor else None
    return _timed(lambda: compute_non_revoked_proofs(
        devices, revoked, params, s, secrets.r_k, workers=threads))


def bench_compute(bits, sizes, trapdoor=True, threads=1, devices=10, seed=0):
    """Prime-representative, accumulate and proof-batch wall times per CRL size."""
    params, secrets = cached_setup(bits, seed)
    dev = _device_reps(devices, seed)
    rows = []
    for size in sizes:
        dt, reps = _timed(lambda: _reps(size, seed))
        rows.append(("prime_rep", bits, size, int(trapdoor), 1, f"{dt:.6f}"))
        dt, _ = time_accumulate(reps, params, secrets, trapdoor)
        rows.append(("accumulate", bits, size, int(trapdoor), 1, f"{dt:.6f}"))
        dt, _ = time_proofs(dev, reps, params, secrets, trapdoor, threads)
        rows.append((f"proofs_x{devices}", bits, size, int(trapdoor), threads, f"{dt:.6f}"))
    return rows


def bench_check(bits, iters, entries=30000, seed=0, revoked=100):
    """Mean single-check latency for each method.

    The accumulator check does not depend on the revoked-set size, so its
    proof is issued against ``revoked`` entries rather than all ``entries``.
    """
    crl = generate_synthetic_crl(entries, seed=seed)
    probe = _device_reps(1, seed)[0]
    probe_id = probe.source_serial + probe.issuer_key_hash

    store = LocalCrlStore.from_crl(crl)
    crl_ms = mean_ms(lambda: crl_lookup(store, probe.source_serial, probe.issuer_key_hash), iters)
    bloom = bloom_from_crl(crl)
    bloom_ms = mean_ms(lambda: probe_id in bloom, iters)

    params, secrets = cached_setup(bits, seed)
    reps = [prime_representative(e.serial, e.issuer_key_hash) for e in crl.entries[:revoked]]
    acc = compute_acc(reps, params, secrets, validate=False)
    proof = compute_non_revoked_proof(probe, reps, params, secrets,
                                      signer=key_from_seed(seed, b"accrl-bench"))
    assert revocation_check(proof, acc, params)
    acc_ms = mean_ms(lambda: revocation_check(proof, acc, params), iters)
    return [
        ("bloom", bits, entries, iters, f"{bloom_ms:.6f}"),
        ("crl", bits, entries, iters, f"{crl_ms:.6f}"),
        ("accumulator", bits, entries, iters, f"{acc_ms:.6f}"),
    ]


def _kernel_cases(bits):
    rng = random.Random(bits)
    n = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
    base = rng.getrandbits(bits) % n
    exp = rng.getrandbits(512) | (1 << 511)
    prime = (1 << 127) - 1
    key = rng.randbytes(52)
    return {
        "powmod": lambda k: k.powmod(base, exp, n),
        "miller_rabin": lambda k: k.miller_rabin(prime, [3, 5, 7, 11, 13]),
        "murmur3": lambda k: k.murmur3_x64_128(key, 0),
    }


def bench_kernels(iters=200, bits=2048, backends=None):
    """Native vs pure-Python timings for the hot kernels."""
    rows = []
    cases = _kernel_cases(bits)
    for name in backends or _backend.available():
        k = _backend.load(name)
        for kernel, fn in cases.items():
            ms = mean_ms(lambda: fn(k), iters)
            rows.append((kernel, name, iters, f"{ms * 1e3:.3f}"))
    return rows


def cpu_count():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def thread_scaling(bits=2048, devices=1000, revoked=100, threads=8, seed=0):
    """``(t_1, t_threads, identical)`` for batch proof issuance."""
    params, secrets = cached_setup(bits, seed)
    reps = _reps(revoked, seed)
    dev = _device_reps(devices, seed)
    t1, one = time_proofs(dev, reps, params, secrets, True, 1)
    tn, many = time_proofs(dev, reps, params, secrets, True, threads)
    return t1, tn, one == many

