"""Acceptance criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear even without -s).
"""

from __future__ import annotations

import random
import time
from functools import lru_cache
from itertools import combinations

import pytest

from darelab.crypto import Crypto, InsufficientQuorumError
from darelab.erasure import DecodeError, Symbol, decode_correcting, encode, error_radius
from darelab.harness.experiment import make_params, run_experiment, sweep
from darelab.harness.observers import run_sync
from darelab.harness.scenarios import SCENARIOS, chaos_policy, scenario_params
from darelab.model import HEADER_BITS, Kind, ProtocolParams
from darelab.simnet import AdversaryPolicy, run
from darelab.values import make_value
from darelab.vector import decode_vector
from support import brute_force_correct
from test_retriever import Garbler, RetrieverNode

SUITE_NS = (4, 7, 10, 13)
SUITE_SEEDS = range(100)
SWEEP_NS = (16, 25, 37, 49)
SWEEP_L = 2**17


def report(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@lru_cache(maxsize=None)
def suite(protocol: str):
    """Every (n, scenario, seed) run of the safety/liveness suite for one protocol."""
    start = time.perf_counter()
    rows = []
    for n in SUITE_NS:
        p = ProtocolParams.for_n(n)
        for scenario in SCENARIOS:
            for seed in SUITE_SEEDS:
                rec, _, _ = run_experiment(protocol, scenario, p, seed)
                rows.append(rec)
    return rows, time.perf_counter() - start


def test_criterion_01_safety_liveness_suite(capsys):
    failures = []
    total, elapsed = 0, 0.0
    for protocol in ("dare", "dare-stark"):
        rows, secs = suite(protocol)
        total += len(rows)
        elapsed += secs
        failures += [
            (r.protocol, r.scenario, r.n, r.seed)
            for r in rows
            if not (r.safety_ok and r.liveness_ok)
        ]
    ok = not failures and total == 2 * len(SUITE_NS) * len(SCENARIOS) * len(SUITE_SEEDS)
    report(capsys, 1, ok, f"{total} runs, {len(failures)} failures {failures[:5]}, {elapsed:.0f}s")


def test_criterion_02_dispersal_count_bound(capsys):
    worst = []
    ok = True
    for n in SWEEP_NS:
        p = ProtocolParams.for_n(n, L=SWEEP_L)
        bound = 3 * p.X * n
        counts = [run_experiment("dare", "adversarial-shift", p, s)[0].dispersal_msg_count for s in range(5)]
        ok &= max(counts) <= bound
        worst.append(f"n={n}: {max(counts)}<={bound}")
    report(capsys, 2, ok, ", ".join(worst))


@pytest.mark.parametrize(
    "protocol,lo,hi", [("dare", 1.3, 1.7), ("baseline", 1.8, 2.2), ("dare-stark", 0.8, 1.2)]
)
def test_criterion_03_complexity_exponents(capsys, protocol, lo, hi):
    start = time.perf_counter()
    records, fit = sweep(protocol, "adversarial-shift", SWEEP_NS, range(3), L=SWEEP_L)
    alive = all(r.safety_ok and r.liveness_ok for r in records)
    ok = alive and lo <= fit.slope <= hi
    resid = ", ".join(f"{x:+.3f}" for x in fit.residuals)
    report(
        capsys,
        3,
        ok,
        f"{protocol} slope {fit.slope:.3f} in [{lo}, {hi}] (residuals {resid}; "
        f"{time.perf_counter() - start:.0f}s)",
    )


def test_criterion_04_good_case_latency_and_bits(capsys):
    p = ProtocolParams.for_n(16, delta=10)
    rec, res, _ = run_experiment("dare", "good-case", p, 0)
    acquire = max(ind.time for ind in res.indications if ind.name == "acquire")
    m = res.metrics
    sync_bits = m.bits_by_kind.get(Kind.VIEW_COMPLETED.value, 0) + m.bits_by_kind.get(
        Kind.ENTER_VIEW.value, 0
    )
    latency_bound = (4 + 20) * p.delta
    ok = (
        rec.liveness_ok
        and rec.safety_ok
        and acquire <= p.overlap
        and rec.latency <= latency_bound
        and rec.dispersal_msg_count == p.X * p.n
        and sync_bits <= 4 * p.n**2 * p.kappa
    )
    report(
        capsys,
        4,
        ok,
        f"last acquire {acquire} <= {p.overlap}, latency {rec.latency} <= {latency_bound}, "
        f"dispersals {rec.dispersal_msg_count} = X*n, sync bits {sync_bits} <= 4 n^2 kappa "
        f"(decided before view 1 ends at {p.view_duration})",
    )


def test_criterion_05_sync_properties(capsys):
    bad = []
    gaps = []
    for seed in range(200):
        p = scenario_params("pre-gst-chaos", "dare", ProtocolParams.for_n(16), seed)
        adv = chaos_policy(p, random.Random(f"adversary|pre-gst-chaos|{seed}"))
        _, rep = run_sync(p, adv, seed)
        if not rep.ok:
            bad.append((seed, rep.violations[:2]))
        else:
            gaps.append(rep.v_sync - rep.v_max)
    ok = not bad
    report(capsys, 5, ok, f"200 runs, {len(bad)} with violations {bad[:3]}, max V*_sync - V_max {max(gaps, default=None)}")


def _garble(sym: Symbol, rng: random.Random) -> Symbol:
    data = rng.randbytes(len(sym.data))
    if data == sym.data:
        data = bytes(b ^ 1 for b in data)
    return Symbol(sym.index, data)


def test_criterion_06_erasure_oracle_equivalence(capsys):
    mismatches = 0
    checked = 0
    for n in (4, 7):
        p = ProtocolParams.for_n(n, L=96 * (n // 3 + 1))
        need = p.quorum - error_radius(p.quorum, p)
        rng = random.Random(600 + n)
        for _ in range(1000):
            v = make_value(p, rng)
            chosen = rng.sample(encode(v, p), p.quorum)
            for k in range(p.t + 1):
                for wrong in combinations(range(p.quorum), k):
                    got = [_garble(s, rng) if i in wrong else s for i, s in enumerate(chosen)]
                    expect = brute_force_correct({s.index: s.data for s in got}, p, need)
                    try:
                        out = decode_correcting(got, p)
                    except DecodeError:
                        out = None
                    checked += 1
                    mismatches += out != expect
    report(capsys, 6, mismatches == 0, f"{checked} error patterns, {mismatches} mismatches")


def test_criterion_07_crypto_quorum_boundary(capsys):
    ok = True
    cases = 0
    for t in (1, 2, 3, 4):
        n = 3 * t + 1
        c = Crypto(n, t)
        parts = {i: c.share_sign(i, b"boundary") for i in range(1, n + 1)}
        for group in combinations(parts, 2 * t):
            cases += 1
            try:
                c.combine(parts[i] for i in group)
                ok = False
            except InsufficientQuorumError:
                pass
        for group in combinations(parts, 2 * t + 1):
            cases += 1
            ok &= c.verify_sig(b"boundary", c.combine(parts[i] for i in group))
    report(capsys, 7, ok, f"{cases} signer sets checked exhaustively for t = 1..4")


def test_criterion_08_stark_message_cap(capsys):
    rows, _ = suite("dare-stark")
    over = []
    for r in rows:
        p = ProtocolParams.for_n(r.n)
        cap = p.symbol_bits + p.kappa + p.proof_kappa + HEADER_BITS
        if r.max_msg_bits > cap:
            over.append((r.scenario, r.n, r.seed, r.max_msg_bits, cap))
    report(capsys, 8, not over, f"{len(rows)} runs, {len(over)} above the cap {over[:3]}")


def test_criterion_09_retriever_precondition_boundary(capsys):
    failures = []
    runs = 0
    for n in (4, 7, 10, 13):
        p = ProtocolParams.for_n(n)
        for seed in range(100):
            rng = random.Random(seed)
            v = make_value(p, rng)
            procs = list(range(1, n + 1))
            corrupt = frozenset(rng.sample(procs, p.t))
            correct = [i for i in procs if i not in corrupt]
            holders = set(rng.sample(correct, p.t + 1))
            adv = AdversaryPolicy(
                corrupt, lambda i, ctx: Garbler(ctx, random.Random(seed * 1000 + i))
            )
            res = run(p, lambda i, ctx: RetrieverNode(ctx, v if i in holders else None), adv, seed)
            runs += 1
            if not res.liveness_ok or set(res.metrics.decisions.values()) != {v}:
                failures.append((n, seed))
    report(capsys, 9, not failures, f"{runs} runs with t+1 holders and garbling byzantines, failures {failures[:5]}")


def test_criterion_10_vector_reduction(capsys):
    bad = []
    runs = 0
    for n in (4, 7):
        p = make_params("vector", n, L=64)
        for scenario in ("good-case", "silent-faults"):
            for seed in range(50):
                rec, res, setup = run_experiment("vector", scenario, p, seed)
                runs += 1
                decided = set(res.metrics.decisions.values())
                ok = rec.liveness_ok and rec.safety_ok and len(decided) == 1
                if ok:
                    entries = decode_vector(next(iter(decided)), p)
                    ids = [e[0] for e in entries]
                    ok = len(ids) == n - p.t == len(set(ids)) and setup.valid(next(iter(decided)))
                if not ok:
                    bad.append((n, scenario, seed))
    report(capsys, 10, not bad, f"{runs} runs, {len(bad)} failures {bad[:5]}")
