"""Leader-based validated consensus with quorum certificates and locking.

Views have a single leader and are grouped into epochs of t+1 consecutive
views. Processes synchronize at epoch boundaries (2t+1 signed
EPOCH-COMPLETED messages, a delta wait, then ENTER-EPOCH); inside an epoch
views advance on local timers. Each view runs two voting phases:

* prepare: the leader proposes, voters check validity and their lock, the
  leader aggregates 2t+1 votes into a prepare certificate;
* commit: processes lock on the prepare certificate and vote again; 2t+1
  commit votes form a commit certificate, and the leader broadcasts DECIDE.

A leader other than the first one collects STATUS messages carrying every
process's lock and re-proposes the highest locked payload.

The same engine drives the DARE agreement (payload = hash and dispersal
signature) and the full-value baseline (payload = the value itself); the
two use distinct message kinds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .crypto import PartialSignature, ThresholdSignature
from .model import Kind, Message
from .simnet import Context


@dataclass(frozen=True)
class KindSet:
    status: Kind
    propose: Kind
    vote: Kind
    qc: Kind
    decide: Kind
    epoch_completed: Kind
    enter_epoch: Kind

    def all(self) -> frozenset[Kind]:
        return frozenset(self.__dict__.values())


AGREEMENT_KINDS = KindSet(
    Kind.AGR_STATUS,
    Kind.AGR_PROPOSE,
    Kind.AGR_VOTE,
    Kind.AGR_QC,
    Kind.AGR_DECIDE,
    Kind.AGR_EPOCH_COMPLETED,
    Kind.AGR_ENTER_EPOCH,
)

BASELINE_KINDS = KindSet(
    Kind.BASE_STATUS,
    Kind.BASE_PROPOSE,
    Kind.BASE_VOTE,
    Kind.BASE_QC,
    Kind.BASE_DECIDE,
    Kind.BASE_EPOCH_COMPLETED,
    Kind.BASE_ENTER_EPOCH,
)

PREPARE = "prepare"
COMMIT = "commit"


@dataclass(frozen=True)
class QuorumCertificate:
    view: int
    phase: str
    digest: bytes
    sig: ThresholdSignature


def pair_digest(pair: Any) -> bytes:
    """Digest of a (hash, threshold signature) agreement payload."""
    h, sig = pair
    signers = ",".join(str(s) for s in sorted(sig.signers)).encode()
    return hashlib.blake2b(h + sig.tag + signers, digest_size=16).digest()


def view_leader(view: int, n: int) -> int:
    return (view - 1) % n + 1


class Agreement:
    def __init__(
        self,
        ctx: Context,
        valid: Callable[[Any], bool],
        digest: Callable[[Any], bytes],
        on_decide: Callable[[Any], None],
        kinds: KindSet = AGREEMENT_KINDS,
        tag: str = "agr",
    ) -> None:
        self.ctx = ctx
        self.p = ctx.p
        self.valid = valid
        self.digest = digest
        self.on_decide = on_decide
        self.kinds = kinds
        self.tag = tag
        self._kindset = kinds.all()
        self._view_timer = (tag, "view")
        self._status_timer = (tag, "status")
        self._epoch_timer = (tag, "epoch")

        self.proposal: Any = None
        self.started = False
        self.halted = False
        self.decided: Any = None
        self._buffer: list[Message] = []

        self.epoch = 0
        self.pending_epoch = 0
        self.epoch_sig: Optional[ThresholdSignature] = None
        self.view_in_epoch = 0
        self.cur_view = 0
        self.max_view = 0
        self.epochs_entered = 0
        self._epoch_done: dict[int, dict[int, PartialSignature]] = {}

        self.lock_payload: Any = None
        self.lock_qc: Optional[QuorumCertificate] = None
        self.last_prepare_vote = 0
        self._commit_voted: set[int] = set()
        self.payloads: dict[bytes, Any] = {}

        # leader-side state, keyed by view
        self._statuses: dict[int, dict[int, tuple]] = {}
        self._proposed: dict[int, tuple[bytes, Any]] = {}
        self._votes: dict[tuple[int, str, bytes], dict[int, PartialSignature]] = {}
        self._qc_sent: set[tuple[int, str]] = set()

    # helpers

    def handles(self, msg: Message) -> bool:
        return msg.kind in self._kindset

    def _vote_bytes(self, phase: str, view: int, digest: bytes) -> bytes:
        return b"%s|%s|%d|" % (self.tag.encode(), phase.encode(), view) + digest

    def _epoch_bytes(self, epoch: int) -> bytes:
        return b"%s|epoch|%d" % (self.tag.encode(), epoch)

    def _delta(self) -> int:
        p = self.p
        if not p.unknown_delta_mode:
            return p.delta
        guess = p.delta_guess or 1
        return guess << max(self.epochs_entered - 1, 0)

    def _qc_ok(self, qc: Any, phase: str) -> bool:
        if not isinstance(qc, QuorumCertificate) or qc.phase != phase:
            return False
        return self.ctx.crypto.verify_sig(self._vote_bytes(phase, qc.view, qc.digest), qc.sig)

    def _payload_ok(self, payload: Any) -> bool:
        try:
            return bool(self.valid(payload))
        except Exception:
            return False

    # interface

    def propose(self, payload: Any) -> None:
        if self.started:
            raise RuntimeError("propose may be invoked only once")
        self.started = True
        self.proposal = payload
        self._enter_epoch(1)
        buffered, self._buffer = self._buffer, []
        for msg in buffered:
            if self.halted:
                break
            self._dispatch(msg)

    def on_message(self, msg: Message) -> None:
        if self.halted:
            return
        if not self.started:
            self._buffer.append(msg)
            return
        self._dispatch(msg)

    def on_timer(self, key: tuple) -> None:
        if self.halted or not self.started:
            return
        if key == self._view_timer:
            self._next_view()
        elif key == self._status_timer:
            self._try_propose(self.cur_view, timed_out=True)
        elif key == self._epoch_timer:
            self.ctx.broadcast(self.kinds.enter_epoch, (self.pending_epoch, self.epoch_sig))
            self._enter_epoch(self.pending_epoch)

    # epochs and views

    def _enter_epoch(self, epoch: int) -> None:
        self.epoch = epoch
        self.pending_epoch = epoch
        self.epochs_entered += 1
        self.view_in_epoch = 0
        self.ctx.indicate(f"{self.tag}_epoch", epoch=epoch)
        self._next_view()

    def _next_view(self) -> None:
        p = self.p
        self.view_in_epoch += 1
        if self.view_in_epoch > p.t + 1:
            self.cur_view = 0
            e = self.epoch
            self.ctx.broadcast(self.kinds.epoch_completed, (e, self.ctx.sign(self._epoch_bytes(e))))
            return
        view = (self.epoch - 1) * (p.t + 1) + self.view_in_epoch
        self.ctx.measure(self._view_timer, p.agreement_view_factor * self._delta())
        self._enter_view(view)

    def _enter_view(self, view: int) -> None:
        self.cur_view = view
        self.max_view = max(self.max_view, view)
        leader = view_leader(view, self.p.n)
        if view == 1:
            if leader == self.ctx.pid:
                self._proposed[1] = (self.digest(self.proposal), self.proposal)
                self._send_proposal(1, self.proposal, None)
            return
        self.ctx.send(leader, self.kinds.status, (view, self.lock_payload, self.lock_qc))
        if leader == self.ctx.pid:
            self.ctx.measure(self._status_timer, 3 * self._delta())

    def _on_epoch_completed(self, msg: Message) -> None:
        try:
            epoch, psig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(epoch, int) or epoch < self.pending_epoch:
            return
        if not isinstance(psig, PartialSignature) or psig.signer != msg.sender:
            return
        if not self.ctx.crypto.verify_partial(self._epoch_bytes(epoch), psig):
            return
        sigs = self._epoch_done.setdefault(epoch, {})
        sigs.setdefault(msg.sender, psig)
        if len(sigs) >= self.p.quorum:
            self.epoch_sig = self.ctx.crypto.combine(sigs.values())
            self._prepare_epoch(epoch + 1)

    def _on_enter_epoch(self, msg: Message) -> None:
        try:
            epoch, sig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(epoch, int) or epoch <= self.pending_epoch or epoch < 2:
            return
        if not self.ctx.crypto.verify_sig(self._epoch_bytes(epoch - 1), sig):
            return
        self.epoch_sig = sig
        self._prepare_epoch(epoch)

    def _prepare_epoch(self, epoch: int) -> None:
        self.pending_epoch = epoch
        self.cur_view = 0
        self.ctx.cancel(self._view_timer)
        self.ctx.cancel(self._status_timer)
        self.ctx.measure(self._epoch_timer, self._delta())

    # leader role

    def _on_status(self, msg: Message) -> None:
        try:
            view, lock_payload, lock_qc = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(view, int) or view_leader(view, self.p.n) != self.ctx.pid:
            return
        if view in self._proposed:
            return
        if lock_qc is not None:
            if not self._qc_ok(lock_qc, PREPARE) or lock_qc.view >= view:
                return
            if not self._payload_ok(lock_payload) or self.digest(lock_payload) != lock_qc.digest:
                return
        self._statuses.setdefault(view, {}).setdefault(msg.sender, (lock_payload, lock_qc))
        self._try_propose(view, timed_out=False)

    def _try_propose(self, view: int, timed_out: bool) -> None:
        if view != self.cur_view or view in self._proposed:
            return
        if view_leader(view, self.p.n) != self.ctx.pid:
            return
        got = self._statuses.get(view, {})
        if len(got) < self.p.quorum:
            return
        if len(got) < self.p.n and not timed_out:
            return
        best = None
        for payload, qc in got.values():
            if qc is not None and (best is None or qc.view > best[1].view):
                best = (payload, qc)
        if best is None:
            payload, justify = self.proposal, None
        else:
            payload, justify = best
        self._proposed[view] = (self.digest(payload), payload)
        self._send_proposal(view, payload, justify)

    def _send_proposal(self, view: int, payload: Any, justify: Optional[QuorumCertificate]) -> None:
        self.ctx.broadcast(self.kinds.propose, (view, payload, justify))

    def _on_vote(self, msg: Message) -> None:
        try:
            view, phase, digest, psig = msg.payload
        except (TypeError, ValueError):
            return
        if not isinstance(view, int) or view_leader(view, self.p.n) != self.ctx.pid:
            return
        if phase not in (PREPARE, COMMIT) or (view, phase) in self._qc_sent:
            return
        proposed = self._proposed.get(view)
        if proposed is None or proposed[0] != digest:
            return
        if not isinstance(psig, PartialSignature) or psig.signer != msg.sender:
            return
        if not self.ctx.crypto.verify_partial(self._vote_bytes(phase, view, digest), psig):
            return
        votes = self._votes.setdefault((view, phase, digest), {})
        votes.setdefault(msg.sender, psig)
        if len(votes) < self.p.quorum:
            return
        self._qc_sent.add((view, phase))
        qc = QuorumCertificate(view, phase, digest, self.ctx.crypto.combine(votes.values()))
        if phase == PREPARE:
            self.ctx.broadcast(self.kinds.qc, (qc,))
        else:
            self.ctx.broadcast(self.kinds.decide, (proposed[1], qc))

    # replica role

    def _on_propose(self, msg: Message) -> None:
        try:
            view, payload, justify = msg.payload
        except (TypeError, ValueError):
            return
        if view != self.cur_view or msg.sender != view_leader(view, self.p.n):
            return
        if view <= self.last_prepare_vote:
            return
        if not self._payload_ok(payload):
            return
        digest = self.digest(payload)
        if self.lock_qc is not None and digest != self.lock_qc.digest:
            if justify is None or not self._qc_ok(justify, PREPARE):
                return
            if justify.digest != digest or justify.view < self.lock_qc.view or justify.view >= view:
                return
        self.payloads[digest] = payload
        self.last_prepare_vote = view
        psig = self.ctx.sign(self._vote_bytes(PREPARE, view, digest))
        self.ctx.send(msg.sender, self.kinds.vote, (view, PREPARE, digest, psig))

    def _on_qc(self, msg: Message) -> None:
        try:
            (qc,) = msg.payload
        except (TypeError, ValueError):
            return
        if not self._qc_ok(qc, PREPARE) or msg.sender != view_leader(qc.view, self.p.n):
            return
        if qc.digest not in self.payloads or qc.view < self.last_prepare_vote:
            return
        if self.lock_qc is None or qc.view > self.lock_qc.view:
            self.lock_qc = qc
            self.lock_payload = self.payloads[qc.digest]
        if qc.view in self._commit_voted:
            return
        self._commit_voted.add(qc.view)
        psig = self.ctx.sign(self._vote_bytes(COMMIT, qc.view, qc.digest))
        self.ctx.send(msg.sender, self.kinds.vote, (qc.view, COMMIT, qc.digest, psig))

    def _on_decide(self, msg: Message) -> None:
        try:
            payload, qc = msg.payload
        except (TypeError, ValueError):
            return
        if not self._qc_ok(qc, COMMIT) or not self._payload_ok(payload):
            return
        if self.digest(payload) != qc.digest:
            return
        self.decided = payload
        self.halted = True
        for key in (self._view_timer, self._status_timer, self._epoch_timer):
            self.ctx.cancel(key)
        self.ctx.indicate(f"{self.tag}_decide", view=qc.view)
        self.ctx.broadcast(self.kinds.decide, (payload, qc))
        self.on_decide(payload)

    def _dispatch(self, msg: Message) -> None:
        k = self.kinds
        kind = msg.kind
        if kind is k.propose:
            self._on_propose(msg)
        elif kind is k.vote:
            self._on_vote(msg)
        elif kind is k.qc:
            self._on_qc(msg)
        elif kind is k.decide:
            self._on_decide(msg)
        elif kind is k.status:
            self._on_status(msg)
        elif kind is k.epoch_completed:
            self._on_epoch_completed(msg)
        elif kind is k.enter_epoch:
            self._on_enter_epoch(msg)
