"""View-based dispersal yielding a (hash, threshold signature) proof of dispersal.

In every view entered through the synchronizer, each leader sends its
proposal to the n/Y groups of Y processes one group at a time, waiting delta
between groups. Receivers acknowledge valid values from the current view's
leaders with a partial signature on the hash; 2t+1 acknowledgments are
combined into a CONFIRM. The first valid CONFIRM a process sees is its
acquired pair; it echoes it and stops both the disperser and the synchronizer.
"""

from __future__ import annotations

from typing import Callable, Optional

from .crypto import HashValue, PartialSignature, ThresholdSignature
from .model import Kind, Message, Value
from .simnet import Context
from .sync import Sync, leaders

PACE_TIMER = ("disperser", "pace")

DISPERSER_KINDS = frozenset({Kind.DISPERSAL, Kind.ACK, Kind.CONFIRM})


class Disperser:
    def __init__(
        self,
        ctx: Context,
        valid: Callable[[Value], bool],
        on_acquire: Callable[[HashValue, ThresholdSignature], None],
    ) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.valid = valid
        self.on_acquire = on_acquire
        self.sync = Sync(ctx, self._on_advance)
        self.proposal: Optional[Value] = None
        self.proposal_hash: Optional[HashValue] = None
        self.obtained: dict[HashValue, Value] = {}
        self.view = 0
        self.group = 0
        self.acks: dict[HashValue, dict[int, PartialSignature]] = {}
        self.confirmed: set[HashValue] = set()
        self.acquired: Optional[tuple[HashValue, ThresholdSignature]] = None
        self.stopped = False
        self.sent_dispersals = 0

    def handles(self, msg: Message) -> bool:
        return msg.kind in DISPERSER_KINDS

    def disperse(self, v: Value) -> None:
        if self.proposal is not None:
            raise RuntimeError("disperse may be invoked only once")
        if not self.valid(v):
            raise ValueError("disperse requires a valid value")
        self.proposal = v
        self.proposal_hash = self.ctx.crypto.hash(v)
        self.sync.start()

    def lookup(self, h: HashValue) -> Optional[Value]:
        """Read-only view of obtained values."""
        return self.obtained.get(h)

    # pacing

    def _on_advance(self, view: int) -> None:
        if self.stopped:
            return
        self.view = view
        self.group = 0
        self.ctx.cancel(PACE_TIMER)
        if self.ctx.pid in leaders(view, self.p):
            self._next_group()

    def _next_group(self) -> None:
        self.group += 1
        self._send_group(self.group)
        if self.group < self.p.num_groups:
            self.ctx.measure(PACE_TIMER, self.sync.delta)

    def _send_group(self, k: int) -> None:
        y = self.p.Y
        for j in range((k - 1) * y + 1, min(k * y, self.p.n) + 1):
            self.sent_dispersals += 1
            self.ctx.send(j, Kind.DISPERSAL, (self.proposal,))

    def on_timer(self, key: tuple) -> None:
        if key == PACE_TIMER:
            if not self.stopped and self.ctx.pid in leaders(self.view, self.p):
                self._next_group()
        elif not self.stopped:
            self.sync.on_timer(key)

    # messages

    def on_message(self, msg: Message) -> None:
        if self.stopped:
            return
        kind = msg.kind
        if kind is Kind.DISPERSAL:
            self._on_dispersal(msg)
        elif kind is Kind.ACK:
            self._on_ack(msg)
        elif kind is Kind.CONFIRM:
            self._on_confirm(msg)
        else:
            self.sync.on_message(msg)

    def _on_dispersal(self, msg: Message) -> None:
        if self.view == 0 or msg.sender not in leaders(self.view, self.p):
            return
        try:
            (v,) = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(v, Value):
            return
        try:
            ok = self.valid(v)
        except Exception:
            ok = False
        if not ok:
            return
        h = self.ctx.crypto.hash(v)
        self.obtained[h] = v
        self.ctx.indicate("obtain", h=h)
        self.ctx.send(msg.sender, Kind.ACK, (h, self.ctx.sign(h)))

    def _on_ack(self, msg: Message) -> None:
        try:
            h, psig = msg.payload
        except (TypeError, ValueError):
            return
        if h in self.confirmed or not isinstance(psig, PartialSignature):
            return
        if psig.signer != msg.sender or not self.ctx.crypto.verify_partial(h, psig):
            return
        got = self.acks.setdefault(h, {})
        got.setdefault(msg.sender, psig)
        if len(got) >= self.p.quorum:
            self.confirmed.add(h)
            sig = self.ctx.crypto.combine(got.values())
            self.ctx.broadcast(Kind.CONFIRM, (h, sig))

    def _on_confirm(self, msg: Message) -> None:
        try:
            h, sig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(h, bytes) or not self.ctx.crypto.verify_sig(h, sig):
            return
        self.acquired = (h, sig)
        self.ctx.indicate("acquire", h=h)
        self.ctx.broadcast(Kind.CONFIRM, (h, sig))
        self.stop()
        self.on_acquire(h, sig)

    def stop(self) -> None:
        self.stopped = True
        self.ctx.cancel(PACE_TIMER)
        self.sync.stop()
