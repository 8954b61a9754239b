"""Simulation-grade hashing and (2t+1, n) threshold signatures.

Every run owns one :class:`Crypto` registry. Tags are keyed BLAKE2b MACs under
per-process secrets that never leave the registry, so a process can only
produce partial signatures under its own identity, and a threshold tag can
only come out of :meth:`Crypto.combine` on a real quorum.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .model import Value

HashValue = bytes

_TAG_BYTES = 16


class ForgeryError(RuntimeError):
    """A caller tried to sign under an identity other than its own."""


class InsufficientQuorumError(ValueError):
    pass


class MixedMessageError(ValueError):
    pass


class HashCollisionError(RuntimeError):
    pass


@dataclass(frozen=True)
class PartialSignature:
    signer: int
    message_digest: bytes
    tag: bytes


@dataclass(frozen=True)
class ThresholdSignature:
    message_digest: bytes
    signers: frozenset[int]
    tag: bytes


def _mac(key: bytes, *parts: bytes) -> bytes:
    h = hashlib.blake2b(key=key, digest_size=_TAG_BYTES)
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return h.digest()


def _digest(m: bytes) -> bytes:
    return hashlib.blake2b(m, digest_size=16).digest()


class Crypto:
    def __init__(self, n: int, t: int, kappa: int = 256, seed: int = 0) -> None:
        self.n = n
        self.t = t
        self.kappa = kappa
        self.threshold = 2 * t + 1
        root = hashlib.sha256(b"darelab-keys" + seed.to_bytes(8, "big", signed=True)).digest()
        self._secrets = {
            i: hashlib.sha256(root + i.to_bytes(4, "big")).digest() for i in range(1, n + 1)
        }
        self._master = hashlib.sha256(root + b"master").digest()
        self._interned: dict[bytes, bytes] = {}

    # hashing

    def hash(self, x: Union[Value, bytes]) -> HashValue:
        data = x.data if isinstance(x, Value) else bytes(x)
        digest = hashlib.shake_256(data).digest(self.kappa // 8)
        seen = self._interned.setdefault(digest, data)
        if seen != data:
            raise HashCollisionError(f"collision on digest {digest.hex()[:16]}")
        return digest

    # partial signatures

    def share_sign(self, i: int, m: bytes, caller: Optional[int] = None) -> PartialSignature:
        if caller is not None and caller != i:
            raise ForgeryError(f"process {caller} attempted to sign as {i}")
        if i not in self._secrets:
            raise ForgeryError(f"unknown signer {i}")
        d = _digest(m)
        return PartialSignature(i, d, _mac(self._secrets[i], d))

    def verify_partial(self, m: bytes, ps: object) -> bool:
        if not isinstance(ps, PartialSignature) or ps.signer not in self._secrets:
            return False
        d = _digest(m)
        return ps.message_digest == d and ps.tag == _mac(self._secrets[ps.signer], d)

    # single-signer signatures reuse the partial mechanism (a 1-of-1 scheme)
    sign = share_sign
    verify = verify_partial

    # threshold signatures

    def combine(self, partials: Iterable[PartialSignature]) -> ThresholdSignature:
        parts = list(partials)
        digests = {ps.message_digest for ps in parts}
        if len(digests) > 1:
            raise MixedMessageError("partials sign different messages")
        valid = {
            ps.signer
            for ps in parts
            if ps.signer in self._secrets
            and ps.tag == _mac(self._secrets[ps.signer], ps.message_digest)
        }
        if len(valid) < self.threshold:
            raise InsufficientQuorumError(
                f"{len(valid)} distinct valid signers, need {self.threshold}"
            )
        (d,) = digests
        signers = frozenset(valid)
        return ThresholdSignature(d, signers, self._threshold_tag(d, signers))

    def _threshold_tag(self, d: bytes, signers: frozenset[int]) -> bytes:
        return _mac(self._master, d, b",".join(str(s).encode() for s in sorted(signers)))

    def verify_sig(self, m: bytes, sig: object) -> bool:
        if not isinstance(sig, ThresholdSignature):
            return False
        if len(sig.signers) < self.threshold:
            return False
        d = _digest(m)
        try:
            return sig.message_digest == d and sig.tag == self._threshold_tag(d, sig.signers)
        except TypeError:
            return False
