"""DARE-Stark: shard dispersal and retrieval with proofs of correct encoding.

The proof system is a simulation-trusted oracle. ``prove`` only succeeds for
valid values and registers the proven (index, hash, symbol) tuple;
``verify`` accepts exactly the registered tuples. Proofs are charged
``proof_kappa`` bits on the wire.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Optional

from .agreement import Agreement, pair_digest
from .crypto import Crypto, HashValue, PartialSignature, ThresholdSignature
from .erasure import DecodeError, Symbol, SymbolSet, decode, encode
from .model import Kind, Message, ProtocolParams, Value
from .simnet import Context


class NoWitnessError(ValueError):
    """prove was asked to attest a value that is not valid."""


@dataclass(frozen=True)
class ShardProof:
    token: bytes


class ProofSystem:
    """Per-run proof oracle for shard_i(v) = (hash(v), encode_i(v)) iff valid(v)."""

    def __init__(self, p: ProtocolParams, crypto: Crypto, valid: Callable[[Value], bool]) -> None:
        self.p = p
        self.crypto = crypto
        self.valid = valid
        self._key = hashlib.sha256(b"proof-oracle" + crypto._master).digest()
        self._proven: set[tuple[int, bytes, bytes]] = set()
        self._encoded: dict[bytes, list[Symbol]] = {}

    def _symbols(self, v: Value) -> list[Symbol]:
        h = self.crypto.hash(v)
        syms = self._encoded.get(h)
        if syms is None:
            syms = self._encoded[h] = encode(v, self.p)
        return syms

    def shard(self, i: int, v: Value) -> Optional[tuple[HashValue, Symbol]]:
        try:
            ok = self.valid(v)
        except Exception:
            ok = False
        if not ok:
            return None
        return self.crypto.hash(v), self._symbols(v)[i - 1]

    def _token(self, i: int, h: bytes, data: bytes) -> bytes:
        mac = hashlib.blake2b(key=self._key, digest_size=16)
        mac.update(i.to_bytes(4, "big") + h + data)
        return mac.digest()

    def prove(self, i: int, v: Value) -> ShardProof:
        sh = self.shard(i, v)
        if sh is None:
            raise NoWitnessError("no valid witness for this shard")
        h, s = sh
        self._proven.add((i, h, s.data))
        return ShardProof(self._token(i, h, s.data))

    def verify(self, i: int, h: object, s: object, proof: object) -> bool:
        if not isinstance(proof, ShardProof) or not isinstance(s, Symbol) or not isinstance(h, bytes):
            return False
        if s.index != i or (i, h, s.data) not in self._proven:
            return False
        return proof.token == self._token(i, h, s.data)


STARK_KINDS = frozenset({Kind.STARK_DISPERSAL, Kind.STARK_ACK, Kind.STARK_RETRIEVE})


class DareStarkNode:
    def __init__(
        self, ctx: Context, value: Value, valid: Callable[[Value], bool], proofs: ProofSystem
    ) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.value = value
        self.valid = valid
        self.proofs = proofs
        self.agreement = Agreement(ctx, self._pair_valid, pair_digest, self._on_agreement_decide)
        self.proposed_hash: Optional[HashValue] = None
        self.proposal_shards: dict[HashValue, tuple[Symbol, ShardProof]] = {}
        self.acks: dict[int, PartialSignature] = {}
        self.agreement_started = False
        self.decided_hash: Optional[HashValue] = None
        self.retrieve_sent = False
        self.decision_symbols: dict[HashValue, SymbolSet] = {}
        self.decided = False
        self.decision: Optional[Value] = None

    def _pair_valid(self, pair: Any) -> bool:
        h, sig = pair
        return isinstance(h, bytes) and self.ctx.crypto.verify_sig(h, sig)

    def propose(self, v: Value) -> None:
        if self.proposed_hash is not None:
            raise RuntimeError("propose may be invoked only once")
        self.proposed_hash = self.ctx.crypto.hash(v)
        for k in range(1, self.p.n + 1):
            h, s = self.proofs.shard(k, v)
            self._send_shard(k, h, s, self.proofs.prove(k, v))

    def _send_shard(self, k: int, h: HashValue, s: Symbol, proof: ShardProof) -> None:
        self.ctx.send(k, Kind.STARK_DISPERSAL, (h, s, proof))

    # handlers

    def _on_dispersal(self, msg: Message) -> None:
        try:
            h, s, proof = msg.payload
        except (TypeError, ValueError):
            return
        if not self.proofs.verify(self.ctx.pid, h, s, proof):
            return
        self.proposal_shards.setdefault(h, (s, proof))
        self.ctx.send(msg.sender, Kind.STARK_ACK, (h, self.ctx.sign(h)))
        self._maybe_retrieve()

    def _on_ack(self, msg: Message) -> None:
        if self.agreement_started:
            return
        try:
            h, psig = msg.payload
        except (TypeError, ValueError):
            return
        if h != self.proposed_hash or not isinstance(psig, PartialSignature):
            return
        if psig.signer != msg.sender or not self.ctx.crypto.verify_partial(h, psig):
            return
        self.acks.setdefault(msg.sender, psig)
        if len(self.acks) >= self.p.quorum:
            self.agreement_started = True
            sig = self.ctx.crypto.combine(self.acks.values())
            self.ctx.indicate("acquire", h=h)
            self.agreement.propose((h, sig))

    def _on_agreement_decide(self, pair: Any) -> None:
        self.decided_hash = pair[0]
        self._maybe_retrieve()

    def _maybe_retrieve(self) -> None:
        h = self.decided_hash
        if h is None or self.retrieve_sent or h not in self.proposal_shards:
            return
        self.retrieve_sent = True
        s, proof = self.proposal_shards[h]
        self.ctx.broadcast(Kind.STARK_RETRIEVE, (h, s, proof))

    def _on_retrieve(self, msg: Message) -> None:
        try:
            h, s, proof = msg.payload
        except (TypeError, ValueError):
            return
        if not self.proofs.verify(msg.sender, h, s, proof):
            return
        got = self.decision_symbols.setdefault(h, SymbolSet(target_hash=h))
        got.add(s, h)
        if len(got) >= self.p.t + 1 and not self.decided:
            try:
                v = decode(got.values(), self.p)
            except DecodeError:
                return
            self.decided = True
            self.decision = v
            self.ctx.decide(v)

    # simulator interface

    def on_start(self) -> None:
        self.propose(self.value)

    def on_message(self, msg: Message) -> None:
        kind = msg.kind
        if kind is Kind.STARK_DISPERSAL:
            self._on_dispersal(msg)
        elif kind is Kind.STARK_ACK:
            self._on_ack(msg)
        elif kind is Kind.STARK_RETRIEVE:
            self._on_retrieve(msg)
        elif self.agreement.handles(msg):
            self.agreement.on_message(msg)

    def on_timer(self, key: Hashable) -> None:
        self.agreement.on_timer(key)
