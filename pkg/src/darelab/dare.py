"""DARE: disperse, agree on a hash with its proof of dispersal, retrieve."""

from __future__ import annotations

import enum
from typing import Any, Callable, Hashable, Optional

from .agreement import Agreement, pair_digest
from .crypto import HashValue, ThresholdSignature
from .disperser import Disperser
from .model import Message, Value
from .retriever import Retriever
from .simnet import Context


class Phase(enum.Enum):
    IDLE = "idle"
    DISPERSING = "dispersing"
    AGREEING = "agreeing"
    RETRIEVING = "retrieving"
    DECIDED = "decided"


class DareNode:
    """One correct process running DARE on its proposal ``value``."""

    def __init__(self, ctx: Context, value: Value, valid: Callable[[Value], bool]) -> None:
        self.ctx = ctx
        self.value = value
        self.valid = valid
        self.phase = Phase.IDLE
        self.disperser = Disperser(ctx, valid, self._on_acquire)
        self.agreement = Agreement(
            ctx, self._pair_valid, pair_digest, self._on_agreement_decide
        )
        self.retriever = Retriever(ctx, self._on_output)
        self.acquired: Optional[tuple[HashValue, ThresholdSignature]] = None
        self.decided_pair: Optional[tuple[HashValue, ThresholdSignature]] = None
        self.decision: Optional[Value] = None

    def _pair_valid(self, pair: Any) -> bool:
        h, sig = pair
        return isinstance(h, bytes) and self.ctx.crypto.verify_sig(h, sig)

    # composition

    def propose(self, v: Value) -> None:
        if self.phase is not Phase.IDLE:
            raise RuntimeError("propose may be invoked only once")
        self.phase = Phase.DISPERSING
        self.disperser.disperse(v)

    def _on_acquire(self, h: HashValue, sig: ThresholdSignature) -> None:
        if self.acquired is not None:
            return
        self.acquired = (h, sig)
        self.phase = Phase.AGREEING
        self.agreement.propose((h, sig))

    def _on_agreement_decide(self, pair: Any) -> None:
        self.decided_pair = pair
        self.phase = Phase.RETRIEVING
        self.retriever.input(self.disperser.lookup(pair[0]))

    def _on_output(self, v: Value) -> None:
        if self.phase is Phase.DECIDED:
            return
        self.phase = Phase.DECIDED
        self.decision = v
        self.ctx.decide(v)

    # simulator interface

    def on_start(self) -> None:
        self.propose(self.value)

    def on_message(self, msg: Message) -> None:
        if self.agreement.handles(msg):
            self.agreement.on_message(msg)
        elif self.retriever.handles(msg):
            self.retriever.on_message(msg)
        else:
            self.disperser.on_message(msg)

    def on_timer(self, key: Hashable) -> None:
        if key[0] == self.agreement.tag:
            self.agreement.on_timer(key)
        else:
            self.disperser.on_timer(key)
