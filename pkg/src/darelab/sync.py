"""View synchronizer: overlapping views with rotating X-sized leader sets."""

from __future__ import annotations

from typing import Callable, Optional

from .crypto import PartialSignature, ThresholdSignature
from .model import Kind, Message, ProtocolParams
from .simnet import Context

VIEW_TIMER = ("sync", "view")
DISSEMINATION_TIMER = ("sync", "dissemination")


def leaders(view: int, p: ProtocolParams) -> range:
    """Process ids leading ``view``: X consecutive ids, round robin over views."""
    if view < 1:
        raise ValueError("views start at 1")
    groups = p.num_leader_views
    first = ((view - 1) % groups) * p.X + 1
    return range(first, min(first + p.X, p.n + 1))


def view_message(view: int) -> bytes:
    """The byte string signed to attest that ``view`` has completed."""
    return b"view-completed:%d" % view


class DeltaSchedule:
    """Per-view timing. With a known delta every view uses it; otherwise the
    k-th entered view uses guess * 2^(k-1)."""

    def __init__(self, p: ProtocolParams) -> None:
        self.p = p
        self.entered = 0

    def current(self) -> int:
        p = self.p
        if not p.unknown_delta_mode:
            return p.delta
        guess = p.delta_guess or 1
        return guess << max(self.entered - 1, 0)

    def view_duration(self) -> int:
        d = self.current()
        return d * self.p.num_groups + 5 * d


class Sync:
    """One process's synchronizer state machine.

    ``on_advance(view)`` is invoked whenever the process enters a view.
    """

    def __init__(self, ctx: Context, on_advance: Callable[[int], None]) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.on_advance = on_advance
        self.view = 1
        self.view_sig: Optional[ThresholdSignature] = None
        self.schedule = DeltaSchedule(self.p)
        self._completed: dict[int, dict[int, PartialSignature]] = {}
        self.running = False
        self.stopped = False

    @property
    def delta(self) -> int:
        return self.schedule.current()

    def start(self) -> None:
        if self.running or self.stopped:
            return
        self.running = True
        self.schedule.entered = 1
        self.ctx.measure(VIEW_TIMER, self.schedule.view_duration())
        self._advance(1)

    def stop(self) -> None:
        self.stopped = True
        self.running = False
        self.ctx.cancel(VIEW_TIMER)
        self.ctx.cancel(DISSEMINATION_TIMER)

    def _advance(self, view: int) -> None:
        self.ctx.indicate("advance", view=view)
        self.on_advance(view)

    # event handlers

    def on_timer(self, key: tuple) -> bool:
        if key == VIEW_TIMER:
            if self.running:
                self.ctx.broadcast(
                    Kind.VIEW_COMPLETED, (self.view, self.ctx.sign(view_message(self.view)))
                )
            return True
        if key == DISSEMINATION_TIMER:
            if self.running:
                self.ctx.broadcast(Kind.ENTER_VIEW, (self.view, self.view_sig))
                self.schedule.entered += 1
                self.ctx.measure(VIEW_TIMER, self.schedule.view_duration())
                self._advance(self.view)
            return True
        return False

    def on_message(self, msg: Message) -> bool:
        if msg.kind is Kind.VIEW_COMPLETED:
            if self.running:
                self._on_view_completed(msg)
            return True
        if msg.kind is Kind.ENTER_VIEW:
            if self.running:
                self._on_enter_view(msg)
            return True
        return False

    def _on_view_completed(self, msg: Message) -> None:
        try:
            view, psig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(view, int) or view < self.view:
            return
        if not isinstance(psig, PartialSignature) or psig.signer != msg.sender:
            return
        if not self.ctx.crypto.verify_partial(view_message(view), psig):
            return
        self._completed.setdefault(view, {}).setdefault(msg.sender, psig)
        self._check_quorum()

    def _check_quorum(self) -> None:
        ready = [v for v, sigs in self._completed.items() if v >= self.view and len(sigs) >= self.p.quorum]
        if not ready:
            return
        view = max(ready)
        self.view_sig = self.ctx.crypto.combine(self._completed[view].values())
        self._move_to(view + 1)

    def _on_enter_view(self, msg: Message) -> None:
        try:
            view, sig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(view, int) or view <= self.view or view < 2:
            return
        if not self.ctx.crypto.verify_sig(view_message(view - 1), sig):
            return
        self.view_sig = sig
        self._move_to(view)
        self._check_quorum()

    def _move_to(self, view: int) -> None:
        self.view = view
        for v in [v for v in self._completed if v < view - 1]:
            del self._completed[v]
        self.ctx.cancel(VIEW_TIMER)
        self.ctx.cancel(DISSEMINATION_TIMER)
        self.ctx.indicate("sync_view", view=view)
        self.ctx.measure(DISSEMINATION_TIMER, self.delta)
