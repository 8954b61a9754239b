"""Global observers that check synchronizer properties over a finished run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional

from ..model import Message, ProtocolParams
from ..simnet import AdversaryPolicy, Context, Indication, RunResult, run
from ..sync import Sync, leaders


class SyncNode:
    """A process that runs only the synchronizer, forever."""

    def __init__(self, ctx: Context) -> None:
        self.sync = Sync(ctx, lambda view: None)

    def on_start(self) -> None:
        self.sync.start()

    def on_message(self, msg: Message) -> None:
        self.sync.on_message(msg)

    def on_timer(self, key: Hashable) -> None:
        self.sync.on_timer(key)


@dataclass
class SyncReport:
    v_max: int
    v_sync: Optional[int]
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def entries_by_process(indications: list[Indication], correct: list[int]) -> dict[int, list[tuple[int, int]]]:
    """(time, view) of every advance, per correct process, in order."""
    out: dict[int, list[tuple[int, int]]] = {i: [] for i in correct}
    for ind in indications:
        if ind.name == "advance" and ind.pid in out:
            out[ind.pid].append((ind.time, ind.data["view"]))
    return out


def check_sync(result: RunResult, p: ProtocolParams, horizon: int) -> SyncReport:
    gst, delta = p.gst, p.delta
    correct = result.correct
    entries = entries_by_process(result.indications, correct)
    bad: list[str] = []

    for i, seq in entries.items():
        views = [v for _, v in seq]
        if any(b <= a for a, b in zip(views, views[1:])):
            bad.append(f"P{i} entered views non-monotonically: {views}")

    before = [v for seq in entries.values() for tm, v in seq if tm < gst]
    v_max = max(before, default=1)

    for i, seq in entries.items():
        latest = max((v for tm, v in seq if tm <= gst + 3 * delta), default=0)
        if latest < v_max:
            bad.append(f"P{i} not in a view >= V_max={v_max} by GST+3delta")
        window = [v for tm, v in seq if gst <= tm < gst + 3 * delta]
        if len(window) > 3:
            bad.append(f"P{i} entered {len(window)} views in [GST, GST+3delta)")

    # occupancy interval of each view per process: [advance(V), next advance)
    spans: dict[int, dict[int, tuple[int, int]]] = {}
    for i, seq in entries.items():
        for k, (tm, v) in enumerate(seq):
            end = seq[k + 1][0] if k + 1 < len(seq) else math.inf
            spans.setdefault(v, {})[i] = (tm, end)

    need = p.overlap
    v_sync = None
    last_view = max(spans, default=0)
    for v in range(v_max + 1, last_view + 1):
        occ = spans.get(v, {})
        if len(occ) < len(correct):
            if any(start + need <= horizon for start, _ in occ.values()):
                bad.append(f"view {v} skipped by {len(correct) - len(occ)} correct processes")
            continue
        start = max(s for s, _ in occ.values())
        end = min(e for _, e in occ.values())
        if start + need > horizon:
            continue
        if end - start < need:
            bad.append(f"view {v} overlap {end - start} < {need}")
        elif v_sync is None and any(j in correct for j in leaders(v, p)):
            v_sync = v
    m = p.num_leader_views
    if v_sync is None:
        bad.append("no synchronization view before the horizon")
    elif v_sync - v_max > m:
        bad.append(f"V*_sync - V_max = {v_sync - v_max} > {m}")
    return SyncReport(v_max, v_sync, bad)


def sync_horizon(p: ProtocolParams) -> int:
    return p.gst + 3 * p.delta + (p.num_leader_views + 3) * (p.view_duration + 4 * p.delta)


def run_sync(p: ProtocolParams, adversary: AdversaryPolicy, seed: int) -> tuple[RunResult, SyncReport]:
    horizon = sync_horizon(p)
    result = run(p, lambda i, ctx: SyncNode(ctx), adversary, seed, until=horizon)
    return result, check_sync(result, p, horizon)
