import random

from darelab.agreement import PREPARE, Agreement, QuorumCertificate, pair_digest, view_leader
from darelab.crypto import Crypto
from darelab.harness.scenarios import chaos_policy
from darelab.model import Kind, ProtocolParams
from darelab.simnet import AdversaryPolicy, run
from support import Recorder, msg


def _pair(c, p, label):
    h = c.hash(label)
    return h, c.combine(c.share_sign(i, h) for i in range(1, p.quorum + 1))


class AgreementNode:
    def __init__(self, ctx, pair):
        self.ctx = ctx
        self.pair = pair
        self.agreement = Agreement(ctx, self._valid, pair_digest, ctx.decide)

    def _valid(self, pair):
        h, sig = pair
        return isinstance(h, bytes) and self.ctx.crypto.verify_sig(h, sig)

    def on_start(self):
        self.agreement.propose(self.pair)

    def on_message(self, m):
        self.agreement.on_message(m)

    def on_timer(self, key):
        self.agreement.on_timer(key)


class Silent:
    def on_start(self):
        pass

    def on_message(self, m):
        pass

    def on_timer(self, key):
        pass


def _run(p, pairs, seed=0, adversary=None):
    c = Crypto(p.n, p.t, p.kappa, seed)
    made = {i: _pair(c, p, pairs(i)) for i in range(1, p.n + 1)}
    res = run(p, lambda i, ctx: AgreementNode(ctx, made[i]), adversary, seed, crypto=c)
    return res, made, c


def test_leader_rotation():
    assert [view_leader(v, 4) for v in range(1, 7)] == [1, 2, 3, 4, 1, 2]


def test_same_proposals_decide_quickly():
    p = ProtocolParams.for_n(7)
    res, made, c = _run(p, lambda i: b"same")
    assert res.liveness_ok
    assert set(pair_digest(v) for v in res.metrics.decisions.values()) == {pair_digest(made[1])}
    assert max(res.metrics.decision_time.values()) <= 4 * p.delta


def test_different_proposals_decide_one_of_them():
    for n in (4, 7, 10):
        p = ProtocolParams.for_n(n)
        for seed in range(5):
            res, made, c = _run(p, lambda i: b"v%d" % i, seed)
            assert res.liveness_ok
            ds = {pair_digest(v) for v in res.metrics.decisions.values()}
            assert len(ds) == 1
            (h, sig) = next(iter(res.metrics.decisions.values()))
            assert c.verify_sig(h, sig)
            assert ds <= {pair_digest(x) for x in made.values()}


def test_silent_faults_including_first_leaders():
    p = ProtocolParams.for_n(10)
    adv = AdversaryPolicy(corrupt=frozenset({1, 2, 3}), byzantine=lambda i, ctx: Silent())
    res, made, c = _run(p, lambda i: b"v%d" % i, adversary=adv)
    assert res.liveness_ok
    assert len({pair_digest(v) for v in res.metrics.decisions.values()}) == 1


def test_agreement_under_chaos():
    for seed in range(30):
        p = ProtocolParams.for_n(7).replace(gst=seed * 37 % 400 + 10)
        adv = chaos_policy(p, random.Random(seed))
        res, made, c = _run(p, lambda i: b"v%d" % i, seed, adv)
        assert res.liveness_ok
        assert len({pair_digest(v) for v in res.metrics.decisions.values()}) == 1


def test_good_case_bits_are_quadratic_in_kappa_terms():
    # per view only leader-to-all and all-to-leader traffic: C * n^2 * kappa
    ratios = []
    for n in (7, 13, 19, 25):
        p = ProtocolParams.for_n(n)
        res, _, _ = _run(p, lambda i: b"v%d" % i)
        ratios.append(res.metrics.bits_total / (n * n * p.kappa))
    assert max(ratios) < 8
    assert max(ratios) / min(ratios) < 1.5


# scripted single-replica checks


def _replica(pid=2, n=4):
    p = ProtocolParams.for_n(n)
    c = Crypto(p.n, p.t)
    ctx = Recorder(pid, p, c)
    node = AgreementNode(ctx, _pair(c, p, b"mine"))
    node.on_start()
    return p, c, ctx, node.agreement


def test_replica_votes_once_for_valid_leader_proposal():
    p, c, ctx, a = _replica()
    pair = _pair(c, p, b"x")
    a.on_message(msg(Kind.AGR_PROPOSE, 1, 2, 1, pair, None))
    a.on_message(msg(Kind.AGR_PROPOSE, 1, 2, 1, _pair(c, p, b"y"), None))
    votes = ctx.of_kind(Kind.AGR_VOTE)
    assert len(votes) == 1
    view, phase, digest, psig = votes[0].payload
    assert (view, phase, digest) == (1, PREPARE, pair_digest(pair))


def test_replica_ignores_non_leader_and_invalid_payloads():
    p, c, ctx, a = _replica()
    a.on_message(msg(Kind.AGR_PROPOSE, 3, 2, 1, _pair(c, p, b"x"), None))
    h = c.hash(b"z")
    forged = (h, _pair(c, p, b"other")[1])
    a.on_message(msg(Kind.AGR_PROPOSE, 1, 2, 1, forged, None))
    assert not ctx.of_kind(Kind.AGR_VOTE)


def test_messages_before_propose_are_buffered():
    p = ProtocolParams.for_n(4)
    c = Crypto(p.n, p.t)
    ctx = Recorder(2, p, c)
    node = AgreementNode(ctx, _pair(c, p, b"mine"))
    node.on_message(msg(Kind.AGR_PROPOSE, 1, 2, 1, _pair(c, p, b"x"), None))
    assert not ctx.sent
    node.on_start()
    assert len(ctx.of_kind(Kind.AGR_VOTE)) == 1


def test_locked_replica_rejects_unjustified_other_value():
    p, c, ctx, a = _replica()
    x = _pair(c, p, b"x")
    a.on_message(msg(Kind.AGR_PROPOSE, 1, 2, 1, x, None))
    d = pair_digest(x)
    qsig = c.combine(c.share_sign(i, a._vote_bytes(PREPARE, 1, d)) for i in (1, 2, 3))
    qc = QuorumCertificate(1, PREPARE, d, qsig)
    a.on_message(msg(Kind.AGR_QC, 1, 2, qc))
    assert a.lock_qc == qc
    # move to view 2, led by process 2's neighbour
    a.on_timer(a._view_timer)
    assert a.cur_view == 2
    ctx.clear()
    a.on_message(msg(Kind.AGR_PROPOSE, 2, 2, 2, _pair(c, p, b"y"), None))
    assert not ctx.of_kind(Kind.AGR_VOTE)
    a.on_message(msg(Kind.AGR_PROPOSE, 2, 2, 2, x, qc))
    assert len(ctx.of_kind(Kind.AGR_VOTE)) == 1
