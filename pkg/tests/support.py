"""Test doubles and independent oracles shared by the test modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Hashable, Optional

from darelab.crypto import Crypto, PartialSignature
from darelab.model import Kind, Message, ProtocolParams, Value

# --- a scripted context for driving one state machine by hand ---


@dataclass
class Recorder:
    """Stand-in for a simulator context: records sends, timers and indications."""

    pid: int
    p: ProtocolParams
    crypto: Crypto
    time: int = 0
    sent: list[Message] = field(default_factory=list)
    timers: dict[Hashable, int] = field(default_factory=dict)
    indications: list[tuple[int, str, dict]] = field(default_factory=list)
    decisions: list[Any] = field(default_factory=list)
    tamper: Any = None

    @property
    def now(self) -> int:
        return self.time

    def send(self, to: int, kind: Kind, payload: tuple = ()) -> None:
        self.sent.append(Message(kind, self.pid, to, payload))

    def broadcast(self, kind: Kind, payload: tuple = ()) -> None:
        for j in range(1, self.p.n + 1):
            self.send(j, kind, payload)

    def measure(self, key: Hashable, duration: int) -> None:
        self.timers[key] = self.time + duration

    def cancel(self, key: Hashable) -> None:
        self.timers.pop(key, None)

    def sign(self, m: bytes) -> PartialSignature:
        return self.crypto.share_sign(self.pid, m, caller=self.pid)

    def indicate(self, name: str, **data: Any) -> None:
        self.indications.append((self.time, name, data))

    def decide(self, value: Any) -> None:
        self.decisions.append(value)

    # helpers for assertions

    def of_kind(self, kind: Kind) -> list[Message]:
        return [m for m in self.sent if m.kind is kind]

    def named(self, name: str) -> list[tuple[int, str, dict]]:
        return [ind for ind in self.indications if ind[1] == name]

    def clear(self) -> None:
        self.sent.clear()


def msg(kind: Kind, sender: int, receiver: int, *payload: Any) -> Message:
    return Message(kind, sender, receiver, tuple(payload))


# --- GF(2^16) oracle built from carry-less multiplication ---

POLY = 0x1100B


def clmul(a: int, b: int) -> int:
    """Carry-less product reduced modulo the field polynomial, bit by bit."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x10000:
            a ^= POLY
    return r


def _oracle_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 65535
    log = [0] * 65536
    x = 1
    for i in range(65535):
        exp[i] = x
        log[x] = i
        x = clmul(x, 2)
    return exp, log


_OEXP, _OLOG = _oracle_tables()


def omul(a: int, b: int) -> int:
    if not a or not b:
        return 0
    return _OEXP[(_OLOG[a] + _OLOG[b]) % 65535]


def oinv(a: int) -> int:
    return _OEXP[(65535 - _OLOG[a]) % 65535]


# --- Reed-Solomon oracle: Lagrange form, pure python ---


def _words(data: bytes) -> list[int]:
    return [int.from_bytes(data[i : i + 2], "big") for i in range(0, len(data), 2)]


def _stripes(v: Value, t: int) -> list[list[int]]:
    k = t + 1
    data = v.data + bytes(-len(v.data) % (2 * k))
    w = _words(data)
    return [w[i : i + k] for i in range(0, len(w), k)]


def oracle_encode(v: Value, n: int, t: int) -> list[bytes]:
    """Symbol i = evaluations at x=i of each stripe polynomial (coefficients low first)."""
    out = []
    stripes = _stripes(v, t)
    for x in range(1, n + 1):
        words = []
        for coeffs in stripes:
            acc = 0
            for c in reversed(coeffs):
                acc = omul(acc, x) ^ c
            words.append(acc)
        out.append(b"".join(w.to_bytes(2, "big") for w in words))
    return out


def lagrange_weights(xs: tuple[int, ...], x: int) -> list[int]:
    """Weights w_j with P(x) = sum w_j P(xs[j]) for deg P < len(xs)."""
    ws = []
    for j, xj in enumerate(xs):
        num, den = 1, 1
        for m, xm in enumerate(xs):
            if m != j:
                num = omul(num, x ^ xm)
                den = omul(den, xj ^ xm)
        ws.append(omul(num, oinv(den)))
    return ws


def lagrange_coefficients(xs: tuple[int, ...], ys: list[int]) -> list[int]:
    """Coefficients (low first) of the polynomial through the points."""
    k = len(xs)
    coeffs = [0] * k
    for j, xj in enumerate(xs):
        basis = [1]
        den = 1
        for m, xm in enumerate(xs):
            if m == j:
                continue
            nxt = [0] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d] ^= omul(c, xm)
                nxt[d + 1] ^= c
            basis = nxt
            den = omul(den, xj ^ xm)
        scale = omul(ys[j], oinv(den))
        for d in range(k):
            coeffs[d] ^= omul(basis[d], scale)
    return coeffs


def oracle_interpolate(symbols: dict[int, bytes], p: ProtocolParams) -> Value:
    """Decode from exactly t+1 clean symbols by Lagrange interpolation."""
    xs = tuple(sorted(symbols))[: p.t + 1]
    cols = [_words(symbols[x]) for x in xs]
    data = bytearray()
    for s in range(len(cols[0])):
        for c in lagrange_coefficients(xs, [col[s] for col in cols]):
            data += c.to_bytes(2, "big")
    nbytes = -(-p.L // 8)
    return Value(bytes(data[:nbytes]), p.L) if not any(data[nbytes:]) else None


_WEIGHTS: dict[tuple, list[int]] = {}


def brute_force_correct(symbols: dict[int, bytes], p: ProtocolParams, need: int) -> Optional[Value]:
    """Try every (t+1)-subset; return the value whose codeword matches >= need symbols."""
    xs = sorted(symbols)
    k = p.t + 1
    cols = {x: _words(symbols[x]) for x in xs}
    width = len(cols[xs[0]])
    if any(len(c) != width for c in cols.values()):
        return None
    found = None
    for subset in combinations(xs, k):
        agree = k
        for x in xs:
            if x in subset:
                continue
            key = (subset, x)
            ws = _WEIGHTS.get(key)
            if ws is None:
                ws = _WEIGHTS[key] = lagrange_weights(subset, x)
            ok = True
            for s in range(width):
                acc = 0
                for w, xj in zip(ws, subset):
                    acc ^= omul(w, cols[xj][s])
                if acc != cols[x][s]:
                    ok = False
                    break
            agree += ok
        if agree >= need:
            cand = oracle_interpolate({x: symbols[x] for x in subset}, p)
            if cand is not None:
                if found is not None and found != cand:
                    raise AssertionError("two codewords reach the agreement threshold")
                found = cand
    return found
