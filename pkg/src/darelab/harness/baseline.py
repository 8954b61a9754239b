"""The full-value baseline: the shared agreement engine run directly on values."""

from __future__ import annotations

from typing import Any, Callable, Hashable, Optional

from ..agreement import BASELINE_KINDS, Agreement
from ..model import Message, Value
from ..simnet import Context


class BaselineNode:
    def __init__(self, ctx: Context, value: Value, valid: Callable[[Value], bool]) -> None:
        self.ctx = ctx
        self.value = value
        self.valid = valid
        self.agreement = Agreement(
            ctx, valid, ctx.crypto.hash, self._on_decide, kinds=BASELINE_KINDS, tag="base"
        )
        self.decision: Optional[Value] = None

    def _on_decide(self, payload: Any) -> None:
        self.decision = payload
        self.ctx.decide(payload)

    def on_start(self) -> None:
        self.agreement.propose(self.value)

    def on_message(self, msg: Message) -> None:
        if self.agreement.handles(msg):
            self.agreement.on_message(msg)

    def on_timer(self, key: Hashable) -> None:
        self.agreement.on_timer(key)
