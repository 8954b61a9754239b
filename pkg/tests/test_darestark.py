import random

import pytest

from darelab.crypto import Crypto
from darelab.darestark import NoWitnessError, ProofSystem, ShardProof
from darelab.erasure import Symbol, decode, encode
from darelab.harness.experiment import run_experiment
from darelab.model import HEADER_BITS, Kind, ProtocolParams
from darelab.values import make_invalid_value, make_value, validator


def _system(n=4, L=1024):
    p = ProtocolParams.for_n(n, L=L)
    c = Crypto(p.n, p.t)
    return p, c, ProofSystem(p, c, validator(p))


def test_shard_of_valid_value():
    p, c, ps = _system()
    v = make_value(p, random.Random(0))
    h, s = ps.shard(2, v)
    assert h == c.hash(v)
    assert s == encode(v, p)[1]
    assert ps.shard(2, v) == (h, s)


def test_shard_of_invalid_value_is_bottom():
    p, c, ps = _system()
    assert ps.shard(1, make_invalid_value(p, random.Random(0))) is None


def test_prove_verify_completeness_and_soundness():
    p, c, ps = _system()
    v = make_value(p, random.Random(0))
    h, s = ps.shard(3, v)
    proof = ps.prove(3, v)
    assert ps.verify(3, h, s, proof)
    assert not ps.verify(3, h, Symbol(3, bytes(len(s.data))), proof)
    assert not ps.verify(2, h, s, proof)
    assert not ps.verify(3, c.hash(b"x"), s, proof)
    assert not ps.verify(3, h, s, ShardProof(b"\0" * 16))


def test_prove_requires_a_witness():
    p, c, ps = _system()
    with pytest.raises(NoWitnessError):
        ps.prove(1, make_invalid_value(p, random.Random(0)))


def test_verified_shards_decode_to_a_valid_value():
    p, c, ps = _system(n=7)
    v = make_value(p, random.Random(5))
    shards = []
    for i in (2, 5, 7):
        h, s = ps.shard(i, v)
        assert ps.verify(i, h, s, ps.prove(i, v))
        shards.append(s)
    out = decode(shards, p)
    assert validator(p)(out) and c.hash(out) == h


def test_fault_free_run_sends_only_small_messages():
    p = ProtocolParams.for_n(4)
    rec, res, _ = run_experiment("dare-stark", "good-case", p, 0)
    assert rec.safety_ok and rec.liveness_ok
    cap = p.symbol_bits + p.kappa + p.proof_kappa + HEADER_BITS
    assert res.metrics.max_msg_bits <= cap
    assert not {Kind.DISPERSAL.value, Kind.BASE_PROPOSE.value} & set(res.metrics.bits_by_kind)


def test_equivocating_proposers_cannot_break_agreement():
    for n in (4, 7, 10):
        for seed in range(3):
            rec, res, _ = run_experiment("dare-stark", "equivocation", ProtocolParams.for_n(n), seed)
            assert rec.safety_ok and rec.liveness_ok


def test_decide_fires_once():
    rec, res, _ = run_experiment("dare-stark", "good-case", ProtocolParams.for_n(7), 0)
    counts = {}
    for ind in res.indications:
        if ind.name == "decide":
            counts[ind.pid] = counts.get(ind.pid, 0) + 1
    assert set(counts.values()) == {1}
