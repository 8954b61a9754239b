"""Running single experiments and parameter sweeps; CSV output."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from typing import Any, Iterable, Optional, TextIO

import numpy as np

from ..model import Kind, ProtocolParams
from ..simnet import RunResult, run
from ..vector import vector_params
from .protocols import Setup, build_setup
from .scenarios import build_policy, scenario_params


@dataclass
class RunRecord:
    protocol: str
    scenario: str
    n: int
    t: int
    L: int
    kappa: int
    delta: int
    seed: int
    gst: int
    latency: Optional[int]
    bits_total: int
    bits_by_kind: str
    dispersal_msg_count: int
    safety_ok: bool
    liveness_ok: bool
    l_term_bits: int
    max_msg_bits: int
    steps: int


COLUMNS = [f.name for f in fields(RunRecord)]


def make_params(protocol: str, n: int, L: int = 1024, **kw: Any) -> ProtocolParams:
    """Parameters for ``protocol`` at size n. For the vector reduction ``L`` is
    the per-process proposal length; the inner instance carries the vector."""
    if protocol == "vector":
        if (n - 1) % 3:
            ProtocolParams.for_n(n)
        return vector_params(n, L, **kw)
    return ProtocolParams.for_n(n, L=L, **kw)


def check_safety(setup: Setup, result: RunResult) -> bool:
    """Correct decisions agree and satisfy external validity."""
    decisions = list(result.metrics.decisions.values())
    if not decisions:
        return True
    first = decisions[0]
    if any(d != first for d in decisions[1:]):
        return False
    try:
        return bool(setup.valid(first))
    except Exception:
        return False


def run_experiment(
    protocol: str,
    scenario: str,
    p: ProtocolParams,
    seed: int,
    **sim_kw: Any,
) -> tuple[RunRecord, RunResult, Setup]:
    q = scenario_params(scenario, protocol, p, seed)
    setup = build_setup(protocol, q, seed)
    policy = build_policy(scenario, setup, seed)
    result = run(q, setup.factory(), policy, seed, crypto=setup.crypto, **sim_kw)
    m = result.metrics
    by_kind = ";".join(f"{k}:{v}" for k, v in sorted(m.bits_by_kind.items()))
    record = RunRecord(
        protocol=protocol,
        scenario=scenario,
        n=q.n,
        t=q.t,
        L=q.L,
        kappa=q.kappa,
        delta=q.delta,
        seed=seed,
        gst=q.gst,
        latency=m.latency,
        bits_total=m.bits_total,
        bits_by_kind=by_kind,
        dispersal_msg_count=m.msgs_by_kind.get(Kind.DISPERSAL.value, 0),
        safety_ok=check_safety(setup, result),
        liveness_ok=result.liveness_ok and not m.budget_exhausted,
        l_term_bits=m.l_term_bits,
        max_msg_bits=m.max_msg_bits,
        steps=m.steps,
    )
    return record, result, setup


def run_batch(
    protocol: str, scenario: str, p: ProtocolParams, seeds: Iterable[int], **sim_kw: Any
) -> list[RunRecord]:
    return [run_experiment(protocol, scenario, p, s, **sim_kw)[0] for s in seeds]


@dataclass
class SlopeFit:
    protocol: str
    slope: float
    intercept: float
    ns: list[int]
    means: list[float]
    residuals: list[float]


def fit_slope(ns: list[int], values: list[float], protocol: str = "") -> SlopeFit:
    """Least-squares slope of log(values) against log(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return SlopeFit(protocol, float(slope), float(intercept), list(ns), list(values), resid.tolist())


def sweep(
    protocol: str,
    scenario: str,
    ns: Iterable[int],
    seeds: Iterable[int],
    metric: str = "l_term_bits",
    **param_kw: Any,
) -> tuple[list[RunRecord], SlopeFit]:
    records: list[RunRecord] = []
    ns = list(ns)
    seeds = list(seeds)
    means = []
    for n in ns:
        p = make_params(protocol, n, **param_kw)
        batch = run_batch(protocol, scenario, p, seeds)
        records.extend(batch)
        means.append(sum(getattr(r, metric) for r in batch) / len(batch))
    return records, fit_slope(ns, means, protocol)


def write_csv(records: Iterable[RunRecord], out: TextIO) -> None:
    w = csv.DictWriter(out, fieldnames=COLUMNS)
    w.writeheader()
    for r in records:
        w.writerow(asdict(r))


def write_fits(fits: Iterable[SlopeFit], out: TextIO) -> None:
    w = csv.writer(out)
    w.writerow(["protocol", "slope", "intercept", "n", "mean_l_term_bits", "log_residual"])
    for f in fits:
        for n, mean, res in zip(f.ns, f.means, f.residuals):
            w.writerow([f.protocol, f"{f.slope:.4f}", f"{f.intercept:.4f}", n, f"{mean:.1f}", f"{res:.4f}"])
