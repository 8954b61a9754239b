"""Vector consensus by the trivial reduction to DARE.

Each process broadcasts its signed proposal, collects n - t correctly signed
proposals from distinct processes, and proposes the resulting vector to a
DARE instance whose validity predicate checks exactly that shape.

Wire layout of a vector (exactly L = (n - t)(kappa + L_p) bits): for each
entry, a 2-byte proposer id, the L_p-bit proposal, and kappa/8 - 2 bytes of
signature tag.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Hashable, Optional

from .crypto import Crypto, PartialSignature
from .dare import DareNode
from .model import Kind, Message, ProtocolParams, Value
from .simnet import Context


@dataclass(frozen=True)
class SignedProposal:
    proposer: int
    proposal: bytes
    signature: PartialSignature


def vector_params(n: int, proposal_bits: int, **kw) -> ProtocolParams:
    """Params for the inner DARE instance carrying (n - t) signed proposals."""
    t = (n - 1) // 3
    kappa = kw.get("kappa", 256)
    return ProtocolParams(n=n, t=t, L=(n - t) * (kappa + proposal_bits), **kw)


def proposal_message(proposer: int, proposal: bytes) -> bytes:
    return b"vector-proposal|%d|" % proposer + proposal


def _tag_bytes(p: ProtocolParams) -> int:
    return p.kappa // 8 - 2


def encode_vector(entries: list[SignedProposal], p: ProtocolParams) -> Value:
    tb = _tag_bytes(p)
    out = bytearray()
    for e in sorted(entries, key=lambda e: e.proposer):
        out += e.proposer.to_bytes(2, "big") + e.proposal + e.signature.tag[:tb].ljust(tb, b"\0")
    return Value(bytes(out), p.L)


def decode_vector(v: Value, p: ProtocolParams) -> Optional[list[tuple[int, bytes, bytes]]]:
    pb = p.proposal_bits // 8
    tb = _tag_bytes(p)
    width = 2 + pb + tb
    if v.bits != p.L or len(v.data) != (p.n - p.t) * width:
        return None
    out = []
    for k in range(p.n - p.t):
        chunk = v.data[k * width : (k + 1) * width]
        out.append((int.from_bytes(chunk[:2], "big"), chunk[2 : 2 + pb], chunk[2 + pb :]))
    return out


def vector_validator(p: ProtocolParams, crypto: Crypto) -> Callable[[Value], bool]:
    """valid(vector): n - t entries from distinct proposers, all signatures verify."""
    tb = _tag_bytes(p)

    def valid(v: object) -> bool:
        if not isinstance(v, Value):
            return False
        entries = decode_vector(v, p)
        if entries is None:
            return False
        ids = [e[0] for e in entries]
        if len(set(ids)) != len(ids) or any(not 1 <= i <= p.n for i in ids):
            return False
        for proposer, proposal, tag in entries:
            expect = crypto.share_sign(proposer, proposal_message(proposer, proposal))
            if expect.tag[:tb].ljust(tb, b"\0") != tag:
                return False
        return True

    return valid


def make_proposal(p: ProtocolParams, rng: random.Random) -> bytes:
    return rng.randbytes(p.proposal_bits // 8)


class VectorNode:
    def __init__(self, ctx: Context, proposal: bytes) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.proposal = proposal
        self.valid = vector_validator(self.p, ctx.crypto)
        self.collected: dict[int, SignedProposal] = {}
        self.dare: Optional[DareNode] = None
        self.decision: Optional[Value] = None
        self._pending: list[Message] = []

    def vc_propose(self) -> None:
        sig = self.ctx.sign(proposal_message(self.ctx.pid, self.proposal))
        self.ctx.broadcast(Kind.PROPOSAL, (self.proposal, sig))

    def _on_proposal(self, msg: Message) -> None:
        if self.dare is not None:
            return
        try:
            proposal, sig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(proposal, bytes) or len(proposal) != self.p.proposal_bits // 8:
            return
        if not isinstance(sig, PartialSignature) or sig.signer != msg.sender:
            return
        if not self.ctx.crypto.verify(proposal_message(msg.sender, proposal), sig):
            return
        self.collected.setdefault(msg.sender, SignedProposal(msg.sender, proposal, sig))
        if len(self.collected) >= self.p.n - self.p.t:
            entries = sorted(self.collected.values(), key=lambda e: e.proposer)[: self.p.n - self.p.t]
            vec = encode_vector(entries, self.p)
            self.dare = DareNode(self.ctx, vec, self.valid)
            self.dare.propose(vec)
            for m in self._pending:
                self.dare.on_message(m)
            self._pending.clear()

    def on_start(self) -> None:
        self.vc_propose()

    def on_message(self, msg: Message) -> None:
        if msg.kind is Kind.PROPOSAL:
            self._on_proposal(msg)
        elif self.dare is None:
            self._pending.append(msg)
        else:
            self.dare.on_message(msg)

    def on_timer(self, key: Hashable) -> None:
        if self.dare is not None:
            self.dare.on_timer(key)
