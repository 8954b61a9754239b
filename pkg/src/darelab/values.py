"""Test values and the default external validity predicate.

A value is valid when its last 8 bytes are the BLAKE2b checksum of the rest.
Values above the materialization limit are compact tokens of the same shape.
"""

from __future__ import annotations

import hashlib
import random

from .model import ProtocolParams, Value

CHECK_BYTES = 8
TOKEN_BYTES = 32


def _check(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=CHECK_BYTES).digest()


def make_value(p: ProtocolParams, rng: random.Random) -> Value:
    """A fresh valid value of L bits."""
    nbytes = -(-p.L // 8) if p.materialized else TOKEN_BYTES
    body = rng.randbytes(nbytes - CHECK_BYTES)
    return Value(body + _check(body), p.L)


def make_invalid_value(p: ProtocolParams, rng: random.Random) -> Value:
    v = make_value(p, rng)
    flipped = bytes([v.data[0] ^ 0xFF]) + v.data[1:]
    return Value(flipped, p.L)


def checksum_valid(v: object) -> bool:
    if not isinstance(v, Value) or len(v.data) <= CHECK_BYTES:
        return False
    return _check(v.data[:-CHECK_BYTES]) == v.data[-CHECK_BYTES:]


def make_valid_from_body(body: bytes, bits: int) -> Value:
    return Value(body + _check(body), bits)


def validator(p: ProtocolParams):
    """The checksum predicate restricted to L-bit values of the expected layout."""
    nbytes = -(-p.L // 8) if p.materialized else TOKEN_BYTES

    def valid(v: object) -> bool:
        return (
            isinstance(v, Value) and v.bits == p.L and len(v.data) == nbytes and checksum_valid(v)
        )

    return valid
