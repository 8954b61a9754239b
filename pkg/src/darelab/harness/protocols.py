"""Per-protocol wiring: inputs, validity, honest and byzantine node builders."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..agreement import Agreement, pair_digest
from ..crypto import Crypto
from ..darestark import DareStarkNode, ProofSystem
from ..dare import DareNode
from ..disperser import Disperser
from ..erasure import Symbol
from ..model import Kind, Message, ProtocolParams, Value
from ..simnet import Context, Node
from ..values import make_value, validator
from ..vector import VectorNode, proposal_message, make_proposal, vector_validator
from .baseline import BaselineNode

PROTOCOLS = ("dare", "dare-stark", "baseline", "vector")


@dataclass
class Setup:
    """Everything needed to instantiate one protocol run."""

    protocol: str
    p: ProtocolParams
    crypto: Crypto
    valid: Callable[[Any], bool]
    inputs: dict[int, Any]
    # a second, distinct valid input per process, used by equivocators
    alt_inputs: dict[int, Any]
    proofs: Optional[ProofSystem] = None
    extra: dict[str, Any] = field(default_factory=dict)

    def honest(self, pid: int, ctx: Context) -> Node:
        return _honest(self, pid, ctx, self.inputs[pid])

    def factory(self) -> Callable[[int, Context], Node]:
        return self.honest


def build_setup(protocol: str, p: ProtocolParams, seed: int) -> Setup:
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    crypto = Crypto(p.n, p.t, p.kappa, seed)
    rng = random.Random(f"inputs|{protocol}|{seed}")
    if protocol == "vector":
        valid = vector_validator(p, crypto)
        gen: Callable[[], Any] = lambda: make_proposal(p, rng)
    else:
        valid = validator(p)
        gen = lambda: make_value(p, rng)
    inputs = {i: gen() for i in range(1, p.n + 1)}
    alt = {i: gen() for i in range(1, p.n + 1)}
    setup = Setup(protocol, p, crypto, valid, inputs, alt)
    if protocol == "dare-stark":
        setup.proofs = ProofSystem(p, crypto, valid)
    return setup


def _honest(setup: Setup, pid: int, ctx: Context, value: Any) -> Node:
    proto = setup.protocol
    if proto == "dare":
        return DareNode(ctx, value, setup.valid)
    if proto == "dare-stark":
        return DareStarkNode(ctx, value, setup.valid, setup.proofs)
    if proto == "baseline":
        return BaselineNode(ctx, value, setup.valid)
    return VectorNode(ctx, value)


# byzantine behaviours


class SilentNode:
    """Crashed from the start: never sends anything."""

    def on_start(self) -> None:
        pass

    def on_message(self, msg: Message) -> None:
        pass

    def on_timer(self, key: Any) -> None:
        pass


def _split(ctx: Context, kind: Kind, first: tuple, second: tuple) -> None:
    """Send ``first`` to odd-numbered processes and ``second`` to even ones."""
    for j in range(1, ctx.p.n + 1):
        ctx.send(j, kind, first if j % 2 else second)


class _EquivocatingAgreement(Agreement):
    """Leader that proposes two different payloads whenever it knows two."""

    def __init__(self, *args: Any, alternatives: Callable[[], list], **kw: Any) -> None:
        super().__init__(*args, **kw)
        self._alternatives = alternatives

    def _send_proposal(self, view: int, payload: Any, justify: Any) -> None:
        mine = self.digest(payload)
        others = [a for a in self._alternatives() if self.digest(a) != mine]
        if not others:
            super()._send_proposal(view, payload, justify)
            return
        _split(self.ctx, self.kinds.propose, (view, payload, justify), (view, others[0], None))


class _EquivocatingDisperser(Disperser):
    """Leader that disperses its two values to alternating groups and keeps
    collecting proofs of dispersal instead of stopping at the first one."""

    def __init__(self, ctx: Context, valid: Callable, on_acquire: Callable, alt: Value) -> None:
        super().__init__(ctx, valid, on_acquire)
        self.alt = alt
        self.pairs: dict[bytes, Any] = {}

    def _send_group(self, k: int) -> None:
        y = self.p.Y
        value = self.proposal if k % 2 else self.alt
        for j in range((k - 1) * y + 1, min(k * y, self.p.n) + 1):
            self.ctx.send(j, Kind.DISPERSAL, (value,))

    def _on_confirm(self, msg: Message) -> None:
        try:
            h, sig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(h, bytes) or not self.ctx.crypto.verify_sig(h, sig):
            return
        if h in self.pairs:
            return
        self.pairs[h] = (h, sig)
        self.ctx.broadcast(Kind.CONFIRM, (h, sig))
        if self.acquired is None:
            self.acquired = (h, sig)
            self.on_acquire(h, sig)


class EquivocatingDare(DareNode):
    def __init__(self, ctx: Context, value: Value, alt: Value, valid: Callable) -> None:
        super().__init__(ctx, value, valid)
        self.disperser = _EquivocatingDisperser(ctx, valid, self._on_acquire, alt)
        self.agreement = _EquivocatingAgreement(
            ctx,
            self._pair_valid,
            pair_digest,
            self._on_agreement_decide,
            alternatives=lambda: list(self.disperser.pairs.values()),
        )


class EquivocatingStark(DareStarkNode):
    """Sends shards of two different valid values to alternating processes."""

    def __init__(self, ctx: Context, value: Value, alt: Value, valid: Callable, proofs: ProofSystem):
        super().__init__(ctx, value, valid, proofs)
        self.alt = alt

    def propose(self, v: Value) -> None:
        self.proposed_hash = self.ctx.crypto.hash(v)
        for k in range(1, self.p.n + 1):
            src = v if k % 2 else self.alt
            h, s = self.proofs.shard(k, src)
            self._send_shard(k, h, s, self.proofs.prove(k, src))


class EquivocatingBaseline(BaselineNode):
    def __init__(self, ctx: Context, value: Value, alt: Value, valid: Callable) -> None:
        super().__init__(ctx, value, valid)
        self.agreement = _EquivocatingAgreement(
            ctx,
            valid,
            ctx.crypto.hash,
            self._on_decide,
            kinds=self.agreement.kinds,
            tag="base",
            alternatives=lambda: [alt],
        )


class EquivocatingVector(VectorNode):
    """Signs two different proposals and sends each to half of the processes."""

    def __init__(self, ctx: Context, proposal: bytes, alt: bytes) -> None:
        super().__init__(ctx, proposal)
        self.alt = alt

    def vc_propose(self) -> None:
        pid = self.ctx.pid
        a = (self.proposal, self.ctx.sign(proposal_message(pid, self.proposal)))
        b = (self.alt, self.ctx.sign(proposal_message(pid, self.alt)))
        _split(self.ctx, Kind.PROPOSAL, a, b)


def equivocator(setup: Setup, pid: int, ctx: Context) -> Node:
    v, alt = setup.inputs[pid], setup.alt_inputs[pid]
    proto = setup.protocol
    if proto == "dare":
        return EquivocatingDare(ctx, v, alt, setup.valid)
    if proto == "dare-stark":
        return EquivocatingStark(ctx, v, alt, setup.valid, setup.proofs)
    if proto == "baseline":
        return EquivocatingBaseline(ctx, v, alt, setup.valid)
    return EquivocatingVector(ctx, v, alt)


def _garble(data: bytes, rng: random.Random) -> bytes:
    out = rng.randbytes(len(data))
    return out if out != data else bytes(b ^ 0xFF for b in data)


def corrupter(setup: Setup, pid: int, ctx: Context, rng: random.Random) -> Node:
    """Follows the protocol but garbles every retrieval-phase message it sends.

    The full-value baseline has no retrieval phase; there the corrupter
    replaces proposed and decided values with invalid ones.
    """

    def tamper(msg: Message) -> Optional[Message]:
        kind = msg.kind
        if kind in (Kind.SYMBOL_SHARE, Kind.SYMBOL_BCAST):
            (sym,) = msg.payload
            bad = Symbol(sym.index, _garble(sym.data, rng))
            return Message(kind, msg.sender, msg.receiver, (bad,))
        if kind in (Kind.STARK_RETRIEVE, Kind.STARK_DISPERSAL):
            h, sym, proof = msg.payload
            bad = Symbol(sym.index, _garble(sym.data, rng))
            return Message(kind, msg.sender, msg.receiver, (h, bad, proof))
        if kind in (Kind.BASE_PROPOSE, Kind.BASE_DECIDE) and setup.protocol == "baseline":
            payload = list(msg.payload)
            slot = 1 if kind is Kind.BASE_PROPOSE else 0
            v = payload[slot]
            if isinstance(v, Value):
                payload[slot] = Value(_garble(v.data, rng), v.bits)
            return Message(kind, msg.sender, msg.receiver, tuple(payload))
        return msg

    node = setup.honest(pid, ctx)
    ctx.tamper = tamper
    return node
