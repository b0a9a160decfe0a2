"""Kernel selection: GMP-backed Cython extension when importable, else pure Python.

Set ``ACCRL_BACKEND=python`` to force the fallback, ``ACCRL_BACKEND=native``
to make a missing extension an import error.
"""
import os

from . import _pure

_choice = os.environ.get("ACCRL_BACKEND", "").strip().lower()

try:
    if _choice == "python":
        raise ImportError("pure Python backend requested")
    from . import _native as kernels
    BACKEND = "native"
except ImportError:
    if _choice == "native":
        raise
    kernels = _pure
    BACKEND = "python"

# Whether big-integer kernels drop the GIL (threads then scale across cores).
RELEASES_GIL = BACKEND == "native"

_NAMES = (
    "powmod",
    "prod_mod_packed",
    "pow_chain_packed",
    "miller_rabin",
    "murmur3_x64_128",
    "bloom_insert",
    "bloom_contains",
    "bloom_count_hits",
)


def available():
    """Names of the kernel sets that can be loaded in this interpreter."""
    names = ["python"]
    try:
        from . import _native  # noqa: F401
        names.insert(0, "native")
    except ImportError:
        pass
    return names


def load(name):
    """Return the kernel module called ``name`` ("native" or "python")."""
    if name == "python":
        return _pure
    if name == "native":
        from . import _native
        return _native
    raise ValueError(f"unknown backend {name!r}")


powmod = kernels.powmod
prod_mod_packed = kernels.prod_mod_packed
pow_chain_packed = kernels.pow_chain_packed
miller_rabin = kernels.miller_rabin
murmur3_x64_128 = kernels.murmur3_x64_128
bloom_insert = kernels.bloom_insert
bloom_contains = kernels.bloom_contains
bloom_count_hits = kernels.bloom_count_hits
