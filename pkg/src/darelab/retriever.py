"""Retrieval of a value held by at least t+1 correct processes.

Holders send symbol j of their value to process j. A process that receives
t+1 identical copies of its own symbol knows it is genuine and broadcasts it.
Once 2t+1 broadcast symbols are in, a process decodes with error correction
and outputs only if at least 2t+1 of the received symbols match the result.
"""

from __future__ import annotations

from typing import Callable, Optional

from .erasure import DecodeError, Symbol, SymbolSet, decode_correcting, encode
from .model import Kind, Message, Value
from .simnet import Context

RETRIEVER_KINDS = frozenset({Kind.SYMBOL_SHARE, Kind.SYMBOL_BCAST})


class Retriever:
    def __init__(self, ctx: Context, on_output: Callable[[Value], None]) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.on_output = on_output
        self.started = False
        self.my_input: Optional[Value] = None
        # candidate symbol bytes for my own index -> distinct senders
        self.share_tally: dict[bytes, set[int]] = {}
        self.share_senders: set[int] = set()
        self.broadcast_done = False
        self.collected = SymbolSet()
        self.output: Optional[Value] = None
        self.decode_attempts = 0

    def handles(self, msg: Message) -> bool:
        return msg.kind in RETRIEVER_KINDS

    def input(self, v: Optional[Value]) -> None:
        if self.started:
            raise RuntimeError("input may be invoked only once")
        self.started = True
        self.my_input = v
        if v is not None:
            for sym in encode(v, self.p):
                self.ctx.send(sym.index, Kind.SYMBOL_SHARE, (sym,))
        self._maybe_broadcast()
        self._maybe_decode()

    def on_message(self, msg: Message) -> None:
        try:
            (sym,) = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(sym, Symbol) or not isinstance(sym.data, bytes):
            return
        if msg.kind is Kind.SYMBOL_SHARE:
            if sym.index != self.ctx.pid or msg.sender in self.share_senders:
                return
            self.share_senders.add(msg.sender)
            self.share_tally.setdefault(sym.data, set()).add(msg.sender)
            self._maybe_broadcast()
        elif msg.kind is Kind.SYMBOL_BCAST:
            if sym.index != msg.sender or not 1 <= sym.index <= self.p.n:
                return
            if self.collected.add(sym):
                self._maybe_decode()

    def _maybe_broadcast(self) -> None:
        if not self.started or self.broadcast_done:
            return
        for data, senders in self.share_tally.items():
            if len(senders) >= self.p.t + 1:
                self.broadcast_done = True
                self.ctx.broadcast(Kind.SYMBOL_BCAST, (Symbol(self.ctx.pid, data),))
                return

    def _maybe_decode(self) -> None:
        if not self.started or self.output is not None:
            return
        if len(self.collected) < self.p.quorum:
            return
        self.decode_attempts += 1
        try:
            v = decode_correcting(self.collected.values(), self.p, min_agreement=self.p.quorum)
        except DecodeError:
            return
        self.output = v
        self.ctx.indicate("retrieve", value=v)
        self.on_output(v)
