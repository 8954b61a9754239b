"""Deterministic discrete-event simulator of the partially synchronous model.

Before GST the adversary schedules deliveries and skews local clocks; from GST
on, every message is delivered within delta ticks and clocks tick at real
time. Messages still in flight at GST arrive by GST + delta. Local steps take
no time.
"""

from __future__ import annotations

import heapq
import math
import os
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Optional, Protocol

from .crypto import Crypto, PartialSignature
from .model import Kind, Message, ProtocolParams, bit_size, l_term_bits

DEFAULT_STEP_BUDGET = 2_000_000
STEP_BUDGET_ENV = "DARE_LAB_STEP_BUDGET"

# tiebreak rank of simultaneous events at one receiver
_START, _DELIVER, _TIMER = 0, 1, 2


class Node(Protocol):
    def on_start(self) -> None: ...

    def on_message(self, msg: Message) -> None: ...

    def on_timer(self, key: Hashable) -> None: ...


Delay = Callable[[Message, int, random.Random], Optional[int]]


@dataclass
class AdversaryPolicy:
    """Everything the adversary controls in one run.

    ``pre_gst_delivery`` returns an absolute delivery tick for a message sent
    before GST (clamped into the legal window); ``post_gst_delay`` returns a
    delay for later sends (clamped to [1, delta]). ``None`` from either means
    the default uniform draw.
    """

    corrupt: frozenset[int] = frozenset()
    byzantine: Optional[Callable[[int, "Context"], Node]] = None
    start_time: Optional[Callable[[int], int]] = None
    drift: Optional[Callable[[int], float]] = None
    pre_gst_delivery: Optional[Delay] = None
    post_gst_delay: Optional[Delay] = None
    name: str = "benign"


@dataclass
class SimMetrics:
    bits_by_kind: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    msgs_by_kind: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    l_term_bits: int = 0
    max_msg_bits: int = 0
    max_msg_kind: Optional[str] = None
    decision_time: dict[int, int] = field(default_factory=dict)
    decisions: dict[int, Any] = field(default_factory=dict)
    steps: int = 0
    budget_exhausted: bool = False
    end_time: int = 0
    gst: int = 0

    @property
    def bits_total(self) -> int:
        return sum(self.bits_by_kind.values())

    @property
    def latency(self) -> Optional[int]:
        if not self.decision_time:
            return None
        return max(max(0, tick - self.gst) for tick in self.decision_time.values())


@dataclass
class Indication:
    time: int
    pid: int
    name: str
    data: dict


class Context:
    """A process's handle on the network, its clock, and its keys."""

    __slots__ = ("pid", "p", "crypto", "_sim", "tamper")

    def __init__(self, sim: "Simulator", pid: int) -> None:
        self.pid = pid
        self.p = sim.p
        self.crypto = sim.crypto
        self._sim = sim
        # byzantine processes may rewrite (or drop, by returning None) what they send
        self.tamper: Optional[Callable[[Message], Optional[Message]]] = None

    @property
    def now(self) -> int:
        return self._sim.now

    def send(self, to: int, kind: Kind, payload: tuple = ()) -> None:
        msg = Message(kind, self.pid, to, payload)
        if self.tamper is not None:
            msg = self.tamper(msg)
            if msg is None:
                return
        self._sim.send(msg)

    def broadcast(self, kind: Kind, payload: tuple = ()) -> None:
        for j in range(1, self.p.n + 1):
            self.send(j, kind, payload)

    def measure(self, key: Hashable, duration: int) -> None:
        """(Re)arm the timer ``key``; a previous pending expiry is dropped."""
        self._sim.set_timer(self.pid, key, duration)

    def cancel(self, key: Hashable) -> None:
        self._sim.cancel_timer(self.pid, key)

    def sign(self, m: bytes) -> PartialSignature:
        return self.crypto.share_sign(self.pid, m, caller=self.pid)

    def indicate(self, name: str, **data: Any) -> None:
        self._sim.indicate(self.pid, name, data)

    def decide(self, value: Any) -> None:
        self._sim.record_decision(self.pid, value)


def step_budget_default() -> int:
    raw = os.environ.get(STEP_BUDGET_ENV)
    return int(raw) if raw else DEFAULT_STEP_BUDGET


class Simulator:
    def __init__(
        self,
        p: ProtocolParams,
        factory: Callable[[int, Context], Node],
        adversary: Optional[AdversaryPolicy] = None,
        seed: int = 0,
        crypto: Optional[Crypto] = None,
        observers: Iterable[Callable[[Indication], None]] = (),
        record: bool = False,
        step_budget: Optional[int] = None,
        drain: Optional[int] = None,
        until: Optional[int] = None,
    ) -> None:
        self.p = p
        self.adversary = adversary or AdversaryPolicy()
        if len(self.adversary.corrupt) > p.t:
            raise ValueError(f"adversary corrupts {len(self.adversary.corrupt)} > t = {p.t}")
        if self.adversary.corrupt and self.adversary.byzantine is None:
            raise ValueError("corrupt processes need a byzantine behaviour")
        self.rng = random.Random(seed)
        self.crypto = crypto or Crypto(p.n, p.t, p.kappa, seed)
        self.observers = list(observers)
        self.record = record
        self.transcript: list[str] = []
        self.indications: list[Indication] = []
        self.metrics = SimMetrics(gst=p.gst)
        self.step_budget = step_budget if step_budget is not None else step_budget_default()
        # how long to keep running after the last correct decision
        self.drain = drain if drain is not None else 100 * p.delta + 4 * p.view_duration
        self.until = until
        self.now = 0
        self._queue: list[tuple] = []
        self._seq = 0
        self._timer_gen: dict[tuple[int, Hashable], int] = {}
        self._started: set[int] = set()
        self._sizes = {k: bit_size(k, p) for k in Kind}
        self._lterm = {k: l_term_bits(k, p) for k in Kind}
        self.correct = [i for i in range(1, p.n + 1) if i not in self.adversary.corrupt]
        self.nodes: dict[int, Node] = {}
        for i in range(1, p.n + 1):
            ctx = Context(self, i)
            if i in self.adversary.corrupt:
                self.nodes[i] = self.adversary.byzantine(i, ctx)
            else:
                self.nodes[i] = factory(i, ctx)
        self._start_at: dict[int, int] = {}
        for i in range(1, p.n + 1):
            start = self.adversary.start_time(i) if self.adversary.start_time else 0
            if not 0 <= start <= p.gst:
                raise ValueError(f"process {i} must start within [0, GST], got {start}")
            self._start_at[i] = start
            self._push(start, i, _START, None)

    # event plumbing

    def _push(self, time: int, receiver: int, rank: int, item: Any) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (time, receiver, rank, self._seq, item))

    def send(self, msg: Message) -> None:
        now = self.now
        p = self.p
        sender_correct = msg.sender not in self.adversary.corrupt
        size = self._sizes[msg.kind]
        if sender_correct:
            m = self.metrics
            if size > m.max_msg_bits:
                m.max_msg_bits = size
                m.max_msg_kind = msg.kind.value
            if now >= p.gst:
                m.bits_by_kind[msg.kind.value] += size
                m.msgs_by_kind[msg.kind.value] += 1
                m.l_term_bits += self._lterm[msg.kind]
        if self.record:
            self.transcript.append(f"{now}|{msg.sender}|{msg.receiver}|{msg.kind.value}|{size}")
        if msg.receiver == msg.sender:
            at = now
        elif now < p.gst:
            hi = p.gst + p.delta
            want = None
            if self.adversary.pre_gst_delivery:
                want = self.adversary.pre_gst_delivery(msg, now, self.rng)
            if want is None:
                want = now + self.rng.randint(1, p.delta)
            at = min(max(want, now + 1), hi)
        else:
            d = None
            if self.adversary.post_gst_delay:
                d = self.adversary.post_gst_delay(msg, now, self.rng)
            if d is None:
                d = self.rng.randint(1, p.delta)
            at = now + min(max(d, 1), p.delta)
        self._push(at, msg.receiver, _DELIVER, msg)

    def _expiry(self, pid: int, duration: int) -> int:
        now, gst = self.now, self.p.gst
        f = self.adversary.drift(pid) if self.adversary.drift else 1.0
        if now >= gst or f == 1.0:
            return now + duration
        if f < 1.0:
            raise ValueError("drift factors below 1 are not modelled")
        pre = (gst - now) / f  # local time that elapses before GST
        if duration <= pre:
            return now + math.ceil(duration * f)
        return gst + math.ceil(duration - pre)

    def set_timer(self, pid: int, key: Hashable, duration: int) -> None:
        k = (pid, key)
        gen = self._timer_gen.get(k, 0) + 1
        self._timer_gen[k] = gen
        self._push(self._expiry(pid, duration), pid, _TIMER, (key, gen))

    def cancel_timer(self, pid: int, key: Hashable) -> None:
        k = (pid, key)
        if k in self._timer_gen:
            self._timer_gen[k] += 1

    def indicate(self, pid: int, name: str, data: dict) -> None:
        ind = Indication(self.now, pid, name, data)
        self.indications.append(ind)
        for obs in self.observers:
            obs(ind)

    def record_decision(self, pid: int, value: Any) -> None:
        if pid in self.adversary.corrupt or pid in self.metrics.decisions:
            return
        self.metrics.decisions[pid] = value
        self.metrics.decision_time[pid] = self.now
        self.indicate(pid, "decide", {"value": value})

    # main loop

    def all_decided(self) -> bool:
        return len(self.metrics.decisions) == len(self.correct)

    def run(self) -> SimMetrics:
        q = self._queue
        m = self.metrics
        deadline = None
        while q:
            if m.steps >= self.step_budget:
                m.budget_exhausted = True
                break
            time, receiver, rank, _, item = heapq.heappop(q)
            if deadline is not None and time > deadline:
                break
            if self.until is not None and time > self.until:
                break
            m.steps += 1
            self.now = time
            node = self.nodes[receiver]
            if rank == _START:
                self._started.add(receiver)
                node.on_start()
            elif rank == _DELIVER:
                if receiver not in self._started:
                    # not running yet: the network holds the message until start
                    self._push(self._start_at[receiver], receiver, _DELIVER, item)
                    continue
                node.on_message(item)
            else:
                key, gen = item
                if self._timer_gen.get((receiver, key)) != gen:
                    continue
                node.on_timer(key)
            if deadline is None and self.all_decided():
                deadline = self.now + self.drain
        m.end_time = self.now
        return m


@dataclass
class RunResult:
    metrics: SimMetrics
    transcript: list[str]
    indications: list[Indication]
    nodes: dict[int, Node]
    correct: list[int]

    @property
    def liveness_ok(self) -> bool:
        return len(self.metrics.decisions) == len(self.correct)


def run(
    p: ProtocolParams,
    factory: Callable[[int, Context], Node],
    adversary: Optional[AdversaryPolicy] = None,
    seed: int = 0,
    **kw: Any,
) -> RunResult:
    sim = Simulator(p, factory, adversary, seed, **kw)
    metrics = sim.run()
    return RunResult(metrics, sim.transcript, sim.indications, sim.nodes, sim.correct)
