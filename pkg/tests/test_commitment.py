import os
import random

import pytest
from hypothesis import given, settings, strategies as hs

from purelottery.commitment import (
    CommitmentError, RoundValue, build_chain, commit, hexlify, preimage, random_salt, verify,
)

salts = hs.binary(min_size=32, max_size=32)
digests = hs.binary(min_size=32, max_size=32)
values = hs.integers(min_value=0, max_value=2 ** 64 - 1)

# Frozen with hashlib directly: sha256(int.to_bytes(8, "big") + salt [+ next]).
D_5_ZERO = "f3086d7bfc35be1c68db664ba9ce61a2060126b0d6b4bfb09fd7a5fb7678cada"
D_1_RANGE_NEXT = "e8ca5a8c87bc5af7efa940d0adcdad87bcf1cc07f52d0b4e857dd928ffa86c41"
CHAIN_3_1 = ("3bb9a3d63b50027aeb669d131fb11318646478497c02f5aff3a537d0eea349f4",
             "53f71d1f3f1c9eb22ec00656d77a33f0ad0d06381fc0f1ec59ba3cb904e31c1b")


def test_known_digests():
    d = commit(5, bytes(32))
    assert d.hex() == D_5_ZERO
    assert commit(1, bytes(range(32)), d).hex() == D_1_RANGE_NEXT


def test_round_value_and_plain_int_agree():
    s = bytes(range(32))
    assert commit(RoundValue(3, 7), s) == commit(3, s)


def test_preimage_layout():
    s = b"\x07" * 32
    nxt = b"\x09" * 32
    assert preimage(258, s) == b"\x00" * 6 + b"\x01\x02" + s
    assert preimage(258, s, nxt) == b"\x00" * 6 + b"\x01\x02" + s + nxt
    assert len(preimage(0, s, nxt)) == 72


def test_round_value_bounds():
    with pytest.raises(CommitmentError):
        RoundValue(7, 7)
    with pytest.raises(CommitmentError):
        RoundValue(-1, 3)
    with pytest.raises(CommitmentError):
        RoundValue(0, 0)


@pytest.mark.parametrize("bad", [bytes(31), bytes(33), b""])
def test_commit_rejects_bad_salt(bad):
    with pytest.raises(CommitmentError):
        commit(1, bad)


def test_commit_rejects_oversized_value_and_next():
    with pytest.raises(CommitmentError):
        commit(2 ** 64, bytes(32))
    with pytest.raises(CommitmentError):
        commit(1, bytes(32), bytes(5))


@given(values, salts, hs.one_of(hs.none(), digests))
def test_round_trip(v, s, nxt):
    assert verify(commit(v, s, nxt), v, s, nxt)


@given(values, values, salts, hs.one_of(hs.none(), digests))
def test_other_value_fails(v, w, s, nxt):
    if v != w:
        assert not verify(commit(v, s, nxt), w, s, nxt)


@given(values, salts, hs.integers(min_value=0, max_value=255))
def test_flipped_salt_bit_fails(v, s, bit):
    flipped = bytearray(s)
    flipped[bit // 8] ^= 1 << (bit % 8)
    assert not verify(commit(v, s), v, bytes(flipped))


def test_next_presence_matters():
    s = bytes(32)
    nxt = os.urandom(32)
    assert not verify(commit(1, s, nxt), 1, s)
    assert not verify(commit(1, s), 1, s, nxt)


def test_verify_malformed_is_false():
    s = bytes(32)
    d = commit(2, s)
    assert not verify(d[:31], 2, s)
    assert not verify(d, 2, s[:31])
    assert not verify(d, 2, s, b"\x00")
    assert not verify(d, -1, s)
    assert not verify(d, "2", s)


def test_verify_modulus():
    s = bytes(32)
    d = commit(5, s)
    assert verify(d, 5, s, modulus=6)
    assert not verify(d, 5, s, modulus=5)


def test_chain_definition():
    s1, s2 = b"\x01" * 32, b"\x02" * 32
    chain = build_chain([3, 1], [s1, s2])
    assert tuple(h.hex() for h in chain) == CHAIN_3_1
    assert chain[0] == commit(3, s1, chain[1])
    assert chain[1] == commit(1, s2)
    assert build_chain([4], [s1]) == [commit(4, s1)]


def test_chain_errors():
    with pytest.raises(CommitmentError):
        build_chain([], [])
    with pytest.raises(CommitmentError):
        build_chain([1, 2], [bytes(32)])


@settings(max_examples=60)
@given(hs.lists(hs.integers(0, 1000), min_size=1, max_size=8), hs.data())
def test_chain_sensitivity(vals, data):
    rng = random.Random(len(vals))
    ss = [random_salt(rng) for _ in vals]
    head = build_chain(vals, ss)[0]
    j = data.draw(hs.integers(0, len(vals) - 1))
    changed = list(vals)
    changed[j] += 1
    assert build_chain(changed, ss)[0] != head
    salted = list(ss)
    salted[j] = bytes(b ^ 0xFF for b in salted[j])
    assert build_chain(vals, salted)[0] != head


def test_binding_at_scale():
    rng = random.Random(2024)
    seen = {}
    for _ in range(100_000):
        v, s = rng.randrange(2 ** 16), rng.randbytes(32)
        d = commit(v, s)
        assert seen.setdefault(d, (v, s)) == (v, s)
    assert len(seen) == 100_000


def test_helpers():
    assert len(random_salt()) == 32
    assert random_salt(random.Random(1)) == random_salt(random.Random(1))
    assert hexlify(None) is None
    assert hexlify(b"\x0a") == "0a"
