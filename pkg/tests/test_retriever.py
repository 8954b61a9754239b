import random

import pytest

from darelab.crypto import Crypto
from darelab.erasure import Symbol, encode
from darelab.model import Kind, ProtocolParams
from darelab.retriever import Retriever
from darelab.simnet import AdversaryPolicy, run
from darelab.values import make_value
from support import Recorder, msg


class RetrieverNode:
    def __init__(self, ctx, value):
        self.ctx = ctx
        self.value = value
        self.retriever = Retriever(ctx, ctx.decide)

    def on_start(self):
        self.retriever.input(self.value)

    def on_message(self, m):
        self.retriever.on_message(m)

    def on_timer(self, key):
        pass


class Garbler:
    """Sends random symbols of the right length to everyone, twice over."""

    def __init__(self, ctx, rng):
        self.ctx, self.rng = ctx, rng

    def on_start(self):
        p = self.ctx.p
        nbytes = p.symbol_bits // 8
        for j in range(1, p.n + 1):
            self.ctx.send(j, Kind.SYMBOL_SHARE, (Symbol(j, self.rng.randbytes(nbytes)),))
        self.ctx.broadcast(Kind.SYMBOL_BCAST, (Symbol(self.ctx.pid, self.rng.randbytes(nbytes)),))

    def on_message(self, m):
        pass

    def on_timer(self, key):
        pass


def _run(p, holders, corrupt=(), seed=0):
    rng = random.Random(seed)
    v = make_value(p, rng)
    adv = None
    if corrupt:
        adv = AdversaryPolicy(
            frozenset(corrupt), lambda i, ctx: Garbler(ctx, random.Random(seed * 100 + i))
        )
    res = run(p, lambda i, ctx: RetrieverNode(ctx, v if i in holders else None), adv, seed)
    return res, v


def test_all_correct_input_v():
    p = ProtocolParams.for_n(7)
    res, v = _run(p, set(range(1, 8)))
    assert res.liveness_ok
    assert set(res.metrics.decisions.values()) == {v}


def test_t_plus_one_holders_with_silent_byzantine():
    p = ProtocolParams.for_n(7)

    class Silent:
        on_start = on_message = on_timer = lambda self, *a: None

    rng = random.Random(4)
    v = make_value(p, rng)
    adv = AdversaryPolicy(frozenset({6, 7}), lambda i, ctx: Silent())
    res = run(p, lambda i, ctx: RetrieverNode(ctx, v if i in (1, 2, 3) else None), adv, 4)
    assert res.liveness_ok
    assert set(res.metrics.decisions.values()) == {v}


def test_byzantine_garbage_symbols():
    for seed in range(10):
        p = ProtocolParams.for_n(10)
        res, v = _run(p, {1, 2, 3, 4}, corrupt={8, 9, 10}, seed=seed)
        assert res.liveness_ok
        assert set(res.metrics.decisions.values()) == {v}


def _single(pid=3, n=4):
    p = ProtocolParams.for_n(n)
    ctx = Recorder(pid, p, Crypto(p.n, p.t))
    out = []
    r = Retriever(ctx, out.append)
    return p, ctx, r, out


def test_two_identical_shares_trigger_broadcast_n4():
    p, ctx, r, out = _single()
    v = make_value(p, random.Random(1))
    s3 = encode(v, p)[2]
    r.input(None)
    r.on_message(msg(Kind.SYMBOL_SHARE, 1, 3, s3))
    assert not ctx.of_kind(Kind.SYMBOL_BCAST)
    r.on_message(msg(Kind.SYMBOL_SHARE, 2, 3, s3))
    b = ctx.of_kind(Kind.SYMBOL_BCAST)
    assert len(b) == 4 and b[0].payload[0] == s3


def test_duplicate_share_from_same_sender_counted_once():
    p, ctx, r, out = _single()
    s3 = encode(make_value(p, random.Random(1)), p)[2]
    r.input(None)
    r.on_message(msg(Kind.SYMBOL_SHARE, 1, 3, s3))
    r.on_message(msg(Kind.SYMBOL_SHARE, 1, 3, s3))
    assert not ctx.of_kind(Kind.SYMBOL_BCAST)


def test_share_for_other_index_ignored():
    p, ctx, r, out = _single()
    s2 = encode(make_value(p, random.Random(1)), p)[1]
    r.input(None)
    r.on_message(msg(Kind.SYMBOL_SHARE, 1, 3, s2))
    r.on_message(msg(Kind.SYMBOL_SHARE, 2, 3, s2))
    assert not ctx.of_kind(Kind.SYMBOL_BCAST)


def test_decode_with_one_corrupted_broadcast_symbol():
    p, ctx, r, out = _single(pid=1, n=7)
    v = make_value(p, random.Random(2))
    syms = encode(v, p)
    r.input(None)
    bad = Symbol(7, bytes(len(syms[6].data)))
    for s in syms[:5]:
        r.on_message(msg(Kind.SYMBOL_BCAST, s.index, 1, s))
    r.on_message(msg(Kind.SYMBOL_BCAST, 7, 1, bad))
    assert out == [v]


def test_broadcast_symbol_index_must_match_sender():
    p, ctx, r, out = _single(pid=1, n=4)
    syms = encode(make_value(p, random.Random(2)), p)
    r.input(None)
    for s in syms[:3]:
        r.on_message(msg(Kind.SYMBOL_BCAST, 4, 1, s))
    assert not out and len(r.collected) == 0


def test_input_only_once():
    p, ctx, r, out = _single()
    r.input(None)
    with pytest.raises(RuntimeError):
        r.input(None)
