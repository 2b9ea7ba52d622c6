"""Hash commitments over round values, and chained commitments.

A commitment binds ``value || salt || next`` where ``value`` is encoded as an
8-octet big-endian integer, ``salt`` is 32 octets and ``next`` (optional) is
the 32-octet digest of the following round's commitment.  Fixed widths keep
the concatenation injective.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Optional, Sequence

DIGEST_SIZE = 32
SALT_SIZE = 32
VALUE_SIZE = 8

_VALUE_LIMIT = 1 << (8 * VALUE_SIZE)
_sha256 = hashlib.sha256

Digest = bytes
Salt = bytes


class CommitmentError(ValueError):
    pass


@dataclass(frozen=True)
class RoundValue:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise CommitmentError(f"modulus must be positive, got {self.modulus}")
        if not 0 <= self.value < self.modulus:
            raise CommitmentError(f"value {self.value} outside [0, {self.modulus})")


def _value_of(value) -> int:
    if isinstance(value, RoundValue):
        return value.value
    return value


def preimage(value, salt: Salt, next: Optional[Digest] = None) -> bytes:
    """Canonical byte layout hashed by :func:`commit`."""
    v = _value_of(value)
    if len(salt) != SALT_SIZE:
        raise CommitmentError(f"salt must be {SALT_SIZE} octets, got {len(salt)}")
    if next is not None and len(next) != DIGEST_SIZE:
        raise CommitmentError(f"next digest must be {DIGEST_SIZE} octets")
    if v < 0 or v >= 1 << (8 * VALUE_SIZE):
        raise CommitmentError(f"value {v} does not fit in {VALUE_SIZE} octets")
    head = v.to_bytes(VALUE_SIZE, "big") + salt
    return head if next is None else head + next


def commit(value, salt: Salt, next: Optional[Digest] = None) -> Digest:
    """Digest binding a round value, its salt and (optionally) the next link.

    ``value`` is a :class:`RoundValue` (range-checked on construction) or a
    plain non-negative int.
    """
    if type(value) is int and 0 <= value < _VALUE_LIMIT and len(salt) == SALT_SIZE:
        if next is None:
            return _sha256(value.to_bytes(VALUE_SIZE, "big") + salt).digest()
        if len(next) == DIGEST_SIZE:
            return _sha256(value.to_bytes(VALUE_SIZE, "big") + salt + next).digest()
    return _sha256(preimage(value, salt, next)).digest()


def verify(expected: Digest, value, salt: Salt, next: Optional[Digest] = None,
           modulus: Optional[int] = None) -> bool:
    """True iff ``commit(value, salt, next) == expected``.

    Malformed widths and values outside ``[0, modulus)`` give False rather
    than raising; they cannot have been committed in the first place.
    """
    if type(value) is int and type(expected) is bytes and len(salt) == SALT_SIZE \
            and 0 <= value < _VALUE_LIMIT and (modulus is None or value < modulus):
        pre = value.to_bytes(VALUE_SIZE, "big") + salt
        if next is not None:
            if len(next) != DIGEST_SIZE:
                return False
            pre += next
        return _sha256(pre).digest() == expected
    v = _value_of(value)
    if isinstance(value, RoundValue):
        modulus = value.modulus
    if not isinstance(v, int) or v < 0:
        return False
    if modulus is not None and v >= modulus:
        return False
    if len(expected) != DIGEST_SIZE:
        return False
    try:
        return commit(v, salt, next) == expected
    except CommitmentError:
        return False


def build_chain(values: Sequence, salts: Sequence[Salt]) -> list[Digest]:
    """Commitments ``h^1 .. h^m`` computed back to front.

    ``h^m = H(x^m || r^m)`` and ``h^j = H(x^j || r^j || h^{j+1})``, so the
    first element binds every later value.
    """
    if len(values) != len(salts):
        raise CommitmentError("values and salts differ in length")
    if not values:
        raise CommitmentError("empty chain")
    chain: list[Digest] = [b""] * len(values)
    nxt = None
    for j in range(len(values) - 1, -1, -1):
        nxt = commit(values[j], salts[j], nxt)
        chain[j] = nxt
    return chain


def random_salt(rng=None) -> Salt:
    if rng is None:
        return os.urandom(SALT_SIZE)
    return rng.randbytes(SALT_SIZE)


def hexlify(d: Optional[Digest]) -> Optional[str]:
    return None if d is None else d.hex()
