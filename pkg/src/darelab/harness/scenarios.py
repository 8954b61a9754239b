"""Adversary scenarios: fault placement, start times, drift and message timing."""

from __future__ import annotations

import math
import random
from typing import Callable

from ..model import Kind, Message, ProtocolParams
from ..simnet import AdversaryPolicy
from .protocols import Setup, SilentNode, corrupter, equivocator

SCENARIOS = (
    "good-case",
    "silent-faults",
    "equivocation",
    "pre-gst-chaos",
    "retrieval-corruption",
    "adversarial-shift",
)

# largest drift factor used by the chaos scenario
CHAOS_MAX_DRIFT = 2.0


def scenario_params(scenario: str, protocol: str, p: ProtocolParams, seed: int) -> ProtocolParams:
    """The parameters a scenario runs with (it may move GST)."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if scenario == "pre-gst-chaos":
        if p.gst > 0:
            return p
        rng = random.Random(f"gst|{seed}")
        return p.replace(gst=rng.randint(p.delta, 3 * p.view_duration))
    if scenario == "adversarial-shift":
        return p.replace(gst=shift_gst(protocol, p))
    return p


def build_policy(scenario: str, setup: Setup, seed: int) -> AdversaryPolicy:
    p = setup.p
    rng = random.Random(f"adversary|{scenario}|{seed}")
    procs = list(range(1, p.n + 1))
    if scenario == "good-case":
        return AdversaryPolicy(name=scenario)
    if scenario == "silent-faults":
        corrupt = frozenset(rng.sample(procs, p.t))
        return AdversaryPolicy(corrupt, lambda i, ctx: SilentNode(), name=scenario)
    if scenario == "equivocation":
        # the first t processes lead the earliest views of every sub-protocol
        corrupt = frozenset(range(1, p.t + 1))
        return AdversaryPolicy(
            corrupt, lambda i, ctx: equivocator(setup, i, ctx), name=scenario
        )
    if scenario == "retrieval-corruption":
        corrupt = frozenset(rng.sample(procs, p.t))
        tamper_rng = random.Random(f"tamper|{seed}")
        return AdversaryPolicy(
            corrupt, lambda i, ctx: corrupter(setup, i, ctx, tamper_rng), name=scenario
        )
    if scenario == "pre-gst-chaos":
        return chaos_policy(p, rng)
    return _shift(setup, rng)


def chaos_policy(p: ProtocolParams, rng: random.Random) -> AdversaryPolicy:
    gst = p.gst
    corrupt = frozenset(rng.sample(range(1, p.n + 1), rng.randint(0, p.t)))
    starts = {i: rng.randint(0, gst) for i in range(1, p.n + 1)}
    drifts = {i: rng.uniform(1.0, CHAOS_MAX_DRIFT) for i in range(1, p.n + 1)}

    def pre(msg: Message, now: int, r: random.Random) -> int:
        return now + r.randint(1, gst + p.delta - now)

    return AdversaryPolicy(
        corrupt,
        lambda i, ctx: SilentNode(),
        start_time=starts.__getitem__,
        drift=drifts.__getitem__,
        pre_gst_delivery=pre,
        name="pre-gst-chaos",
    )


# adversarial shift


def shift_layout(p: ProtocolParams) -> tuple[list[int], int]:
    """Processes held back in their own leader views, and the view the rest reach at GST.

    Without byzantine help at most t correct processes can be kept out of a
    view the others complete (a view change needs 2t+1 signers). The held
    processes are those right after the first leader group, each pinned to a
    view it leads; the other 2t+1 run in lockstep and arrive at GST in a
    view whose leaders they are.
    """
    held = list(range(p.X + 1, p.X + p.t + 1))
    reached = 2 + math.ceil(p.t / p.X)
    return held, reached


def _lockstep_period(p: ProtocolParams) -> int:
    # view timer, one tick for VIEW-COMPLETED, delta of dissemination
    return p.view_duration + 1 + p.delta


def shift_gst(protocol: str, p: ProtocolParams) -> int:
    if protocol == "dare":
        _, reached = shift_layout(p)
        return (reached - 1) * _lockstep_period(p)
    if protocol == "baseline":
        return (p.t + 1) * p.agreement_view_factor * p.delta
    return p.view_duration


def _shift(setup: Setup, rng: random.Random) -> AdversaryPolicy:
    p = setup.p
    gst, delta = p.gst, p.delta

    def post(msg: Message, now: int, r: random.Random) -> int:
        return r.randint(max(1, delta // 2), delta)

    if setup.protocol == "dare":
        held, _ = shift_layout(p)
        held_set = set(held)
        own_view = {j: math.ceil(j / p.X) for j in held}

        def pre(msg: Message, now: int, r: random.Random) -> int:
            s, d = msg.sender, msg.receiver
            if d in held_set:
                if (
                    s not in held_set
                    and msg.kind is Kind.ENTER_VIEW
                    and msg.payload[0] == own_view[d]
                ):
                    # lands so that the dissemination wait ends exactly at GST
                    return gst - delta
                return gst + delta
            if s in held_set or msg.kind is Kind.DISPERSAL:
                return gst + delta
            return now + 1

        return AdversaryPolicy(pre_gst_delivery=pre, post_gst_delay=post, name="adversarial-shift")

    if setup.protocol == "baseline":
        view_len = p.agreement_view_factor * delta

        def start(i: int) -> int:
            # process i (i <= t+1) is in view i, which it leads, at GST
            return gst - min(i - 1, p.t + 1) * view_len

        return AdversaryPolicy(
            start_time=start,
            pre_gst_delivery=lambda msg, now, r: gst + delta,
            post_gst_delay=post,
            name="adversarial-shift",
        )

    # no pre-GST view structure to exploit: everyone starts at GST
    return AdversaryPolicy(
        start_time=lambda i: gst, post_gst_delay=post, name="adversarial-shift"
    )
