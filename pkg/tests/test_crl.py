import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accrl.crl import (
    EMPTY_SIZE,
    ENTRY_SIZE,
    CrlFile,
    CrlKind,
    RevokedEntry,
    decode_crl,
    encode_crl,
    encoded_size,
    generate_synthetic_crl,
    make_crl,
    merge,
    verify_crl,
    wire_size,
)
from accrl.errors import (
    BadMagic,
    BadSignature,
    BadVersion,
    DuplicateRevocation,
    FormatError,
    TruncatedFile,
    UnsortedEntries,
)
from accrl.signing import public_bytes

ISSUER = bytes(32)


def entry(i, issuer=ISSUER, t=1000):
    return RevokedEntry(i.to_bytes(20, "big"), t, issuer)


def test_sizes():
    assert EMPTY_SIZE == 98 and ENTRY_SIZE == 60
    assert encoded_size(30000) == 1_800_098
    assert len(encode_crl(make_crl([]))) == 98


def test_roundtrip_signed(ca_key):
    crl = make_crl([entry(3), entry(1), entry(2)], signer=ca_key)
    data = encode_crl(crl)
    assert len(data) == 98 + 3 * 60
    back = decode_crl(data, public_bytes(ca_key))
    assert back == crl
    assert [e.serial[-1] for e in back.entries] == [1, 2, 3]
    assert verify_crl(back, public_bytes(ca_key))


def test_layout_is_big_endian(ca_key):
    crl = make_crl([entry(1, t=0x0102030405060708)], CrlKind.DELTA, base_epoch=5,
                   this_update=10, next_update=20, signer=ca_key)
    data = encode_crl(crl)
    assert data[:4] == b"ACRL" and data[4] == 1 and data[5] == 1
    assert struct.unpack(">QQQI", data[6:34]) == (5, 10, 20, 1)
    assert data[34:54] == (1).to_bytes(20, "big")
    assert data[54:62] == bytes(range(1, 9))


def test_bad_signature(ca_key, manager_key):
    data = encode_crl(make_crl([entry(1)], signer=ca_key))
    with pytest.raises(BadSignature):
        decode_crl(data, public_bytes(manager_key))
    flipped = bytearray(data)
    flipped[40] ^= 1
    with pytest.raises(BadSignature):
        decode_crl(bytes(flipped), public_bytes(ca_key))


def test_typed_errors(ca_key):
    data = encode_crl(make_crl([entry(1), entry(2)], signer=ca_key))
    with pytest.raises(BadMagic):
        decode_crl(b"XCRL" + data[4:])
    with pytest.raises(BadVersion):
        decode_crl(data[:4] + b"\x02" + data[5:])
    with pytest.raises(TruncatedFile):
        decode_crl(data[:-1])
    with pytest.raises(TruncatedFile):
        decode_crl(data[:20])
    with pytest.raises(FormatError):
        decode_crl(data + b"\x00")
    swapped = data[:34] + data[94:154] + data[34:94] + data[154:]
    with pytest.raises(UnsortedEntries):
        decode_crl(swapped)


def test_entry_validation():
    with pytest.raises(ValueError):
        RevokedEntry(bytes(20), 1, ISSUER)
    with pytest.raises(ValueError):
        RevokedEntry(b"\x01" * 19, 1, ISSUER)
    with pytest.raises(ValueError):
        RevokedEntry(b"\x01" * 20, 0, ISSUER)


def test_duplicates_and_merge():
    with pytest.raises(DuplicateRevocation):
        make_crl([entry(1), entry(1)])
    full = make_crl([entry(1), entry(2)])
    delta = make_crl([entry(3)], CrlKind.DELTA)
    merged = merge(full, delta)
    assert len(merged) == 3 and merged.kind == CrlKind.FULL
    with pytest.raises(DuplicateRevocation):
        merge(full, make_crl([entry(2)], CrlKind.DELTA))
    with pytest.raises(ValueError):
        merge(delta, full)


def test_time_ordering():
    with pytest.raises(ValueError):
        make_crl([], this_update=10, next_update=10)


def test_synthetic_deterministic(ca_key):
    a = generate_synthetic_crl(500, seed=7, signer=ca_key)
    b = generate_synthetic_crl(500, seed=7, signer=ca_key)
    assert encode_crl(a) == encode_crl(b)
    assert encode_crl(a) != encode_crl(generate_synthetic_crl(500, seed=8, signer=ca_key))
    assert len(set(a.identities())) == 500
    assert all(e.serial[:4] == bytes(4) for e in a.entries)
    delta = generate_synthetic_crl(50, CrlKind.DELTA, seed=7, exclude=a.identities())
    assert not set(delta.identities()) & set(a.identities())
    merge(a, delta)


def test_compression_shrinks_padded_serials():
    crl = generate_synthetic_crl(2000, seed=1)
    assert wire_size(crl) < encoded_size(2000) / 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 2**160 - 1), st.integers(1, 2**64 - 1),
                          st.binary(min_size=32, max_size=32)),
                unique_by=lambda t: (t[2], t[0]), max_size=30),
       st.sampled_from(list(CrlKind)), st.integers(0, 2**64 - 1))
def test_roundtrip_property(ca_key, raw, kind, base_epoch):
    entries = [RevokedEntry(s.to_bytes(20, "big"), t, i) for s, t, i in raw]
    crl = make_crl(entries, kind, base_epoch, 1, 2, ca_key)
    assert decode_crl(encode_crl(crl), public_bytes(ca_key)) == crl


def test_fuzz_small(ca_key):
    """Mutated, truncated and random inputs: a value or a FormatError, nothing else."""
    rng = random.Random(0)
    good = encode_crl(generate_synthetic_crl(5, seed=3, signer=ca_key))
    for i in range(3000):
        choice = i % 3
        if choice == 0:
            data = good[:rng.randrange(len(good) + 1)]
        elif choice == 1:
            data = bytearray(good)
            for _ in range(rng.randrange(1, 6)):
                data[rng.randrange(len(data))] = rng.randrange(256)
            data = bytes(data)
        else:
            data = b"ACRL" + rng.randbytes(rng.randrange(200))
        try:
            out = decode_crl(data)
        except FormatError:
            continue
        assert isinstance(out, CrlFile)
