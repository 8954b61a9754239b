"""Reed-Solomon coding over GF(2^16) with evaluation points 1..n.

A value is laid out as big-endian 16-bit words, zero padded to a whole number
of stripes. Each stripe holds t+1 words, the coefficients of one degree-t
polynomial. Symbol i concatenates the evaluations at x = i of every stripe, so
it is ceil(L / (t+1)) bits long when L is a multiple of 16(t+1).

Values above the materialization limit are compact tokens; their "symbols"
simply carry the token, which keeps sizes and agreement counts meaningful
without moving the bytes.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import gf
from .model import ProtocolParams, Value


class EncodingLayoutError(ValueError):
    pass


class ArityError(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    index: int
    data: bytes

    @property
    def bits(self) -> int:
        return 8 * len(self.data)


@dataclass
class SymbolSet:
    """Symbols keyed by index, optionally all claiming one hash."""

    target_hash: Optional[bytes] = None
    symbols: dict[int, Symbol] = field(default_factory=dict)

    def add(self, sym: Symbol, h: Optional[bytes] = None) -> bool:
        if self.target_hash is not None and h is not None and h != self.target_hash:
            raise ValueError("symbol claims a different hash than this set")
        if sym.index in self.symbols:
            return False
        self.symbols[sym.index] = sym
        return True

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, index: int) -> bool:
        return index in self.symbols

    def values(self) -> list[Symbol]:
        return [self.symbols[i] for i in sorted(self.symbols)]


def value_bytes(p: ProtocolParams) -> int:
    return -(-p.L // 8)


def _stride(p: ProtocolParams) -> int:
    return 2 * (p.t + 1)


def _num_stripes(p: ProtocolParams) -> int:
    return -(-value_bytes(p) // _stride(p))


def _coefficients(v: Value, p: ProtocolParams) -> np.ndarray:
    if v.bits != p.L or len(v.data) != value_bytes(p):
        raise EncodingLayoutError(
            f"value of {v.bits} bits / {len(v.data)} bytes does not fit L={p.L}"
        )
    padded = v.data + bytes(_num_stripes(p) * _stride(p) - len(v.data))
    words = np.frombuffer(padded, dtype=">u2").astype(np.int64)
    return words.reshape(-1, p.t + 1)


def _from_coefficients(coeffs: np.ndarray, p: ProtocolParams) -> Value:
    raw = coeffs.reshape(-1).astype(">u2").tobytes()
    nbytes = value_bytes(p)
    if any(raw[nbytes:]):
        raise DecodeError("non-zero padding in decoded codeword")
    return Value(raw[:nbytes], p.L)


def _evaluate(coeffs: np.ndarray, xs: list[int]) -> np.ndarray:
    """Evaluations of every stripe at xs, shape (len(xs), stripes)."""
    vt = np.array(gf.vandermonde(xs, coeffs.shape[1]), dtype=np.int64)
    return gf.matmul(vt, coeffs.T)


def _symbol_words(sym: Symbol, stripes: int) -> np.ndarray:
    if len(sym.data) != 2 * stripes:
        raise DecodeError(f"symbol {sym.index} has wrong length {len(sym.data)}")
    return np.frombuffer(sym.data, dtype=">u2").astype(np.int64)


def _check_indices(symbols: list[Symbol], p: ProtocolParams) -> None:
    seen = set()
    for s in symbols:
        if not 1 <= s.index <= p.n:
            raise ArityError(f"symbol index {s.index} outside [1, {p.n}]")
        if s.index in seen:
            raise ArityError(f"duplicate symbol index {s.index}")
        seen.add(s.index)


def encode(v: Value, p: ProtocolParams) -> list[Symbol]:
    if not p.materialized:
        return [Symbol(i, v.data) for i in range(1, p.n + 1)]
    coeffs = _coefficients(v, p)
    evals = _evaluate(coeffs, list(range(1, p.n + 1)))
    return [Symbol(i, evals[i - 1].astype(">u2").tobytes()) for i in range(1, p.n + 1)]


def encode_one(v: Value, i: int, p: ProtocolParams) -> Symbol:
    if not p.materialized:
        return Symbol(i, v.data)
    evals = _evaluate(_coefficients(v, p), [i])
    return Symbol(i, evals[0].astype(">u2").tobytes())


def _interpolate(xs: list[int], ys: np.ndarray) -> np.ndarray:
    """Coefficients (stripes x k) of the polynomials through (xs, ys[j])."""
    vinv = np.array(gf.mat_inverse(gf.vandermonde(xs, len(xs))), dtype=np.int64)
    return gf.matmul(vinv, ys).T


def decode(symbols: Iterable[Symbol], p: ProtocolParams) -> Value:
    """Erasure decoding from any t+1 (uncorrupted) symbols."""
    syms = sorted(symbols, key=lambda s: s.index)
    _check_indices(syms, p)
    if len(syms) < p.t + 1:
        raise ArityError(f"need {p.t + 1} symbols, got {len(syms)}")
    if not p.materialized:
        return Value(syms[0].data, p.L)
    use = syms[: p.t + 1]
    stripes = _num_stripes(p)
    ys = np.stack([_symbol_words(s, stripes) for s in use])
    return _from_coefficients(_interpolate([s.index for s in use], ys), p)


def error_radius(m: int, p: ProtocolParams) -> int:
    """Largest number of corrupted symbols uniquely correctable among m."""
    return max((m - p.t - 1) // 2, 0)


def _berlekamp_welch(xs: list[int], ys: list[int], k: int, e: int) -> Optional[list[int]]:
    """Degree < k polynomial agreeing with all but at most e points, or None."""
    rows = []
    rhs = []
    for x, y in zip(xs, ys):
        powers = [gf.pow_(x, j) for j in range(k + e)]
        rows.append(powers + [gf.mul(y, powers[j]) for j in range(e)])
        rhs.append(gf.mul(y, gf.pow_(x, e)))
    sol = gf.solve(rows, rhs)
    if sol is None:
        return None
    q = sol[: k + e]
    err = sol[k + e :] + [1]
    poly, rem = gf.poly_divmod(q, err)
    if any(rem):
        return None
    wrong = sum(1 for x, y in zip(xs, ys) if gf.poly_eval(poly, x) != y)
    return poly if wrong <= e else None


def _agreement(coeffs: np.ndarray, xs: list[int], ys: np.ndarray) -> np.ndarray:
    """Boolean mask of the symbols that match the codeword."""
    return np.all(_evaluate(coeffs, xs) == ys, axis=1)


def _combine_stripes(ys: np.ndarray, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    r = rng.integers(1, gf.ORDER + 1, size=ys.shape[1], dtype=np.int64)
    return np.bitwise_xor.reduce(gf.vmul(ys, r[None, :]), axis=1).tolist()


def _correct_tokens(syms: list[Symbol], p: ProtocolParams, need: int) -> Value:
    data, count = Counter(s.data for s in syms).most_common(1)[0]
    if count < need:
        raise DecodeError("no token value reaches the agreement threshold")
    return Value(data, p.L)


def decode_correcting(
    symbols: Iterable[Symbol], p: ProtocolParams, min_agreement: Optional[int] = None
) -> Value:
    """Error-correcting decode from m >= 2t+1 symbols.

    Succeeds iff some codeword agrees with at least m - r of the symbols, where
    r = floor((m - t - 1) / 2) is the unique decoding radius (and with at least
    min_agreement of them, when given). Raises DecodeError otherwise.
    """
    syms = sorted(symbols, key=lambda s: s.index)
    _check_indices(syms, p)
    m = len(syms)
    if m < 2 * p.t + 1:
        raise ArityError(f"need {2 * p.t + 1} symbols, got {m}")
    e = error_radius(m, p)
    need = max(m - e, min_agreement or 0)
    if not p.materialized:
        return _correct_tokens(syms, p, need)
    stripes = _num_stripes(p)
    try:
        ys = np.stack([_symbol_words(s, stripes) for s in syms])
    except DecodeError:
        # a wrong-length symbol is corrupt; replace its words by a sentinel row
        rows = []
        for s in syms:
            try:
                rows.append(_symbol_words(s, stripes))
            except DecodeError:
                rows.append(np.full(stripes, -1, dtype=np.int64))
        ys = np.stack(rows)
    xs = [s.index for s in syms]
    k = p.t + 1

    def accept(coeffs: np.ndarray) -> Optional[Value]:
        if int(_agreement(coeffs, xs, ys).sum()) < need:
            return None
        try:
            return _from_coefficients(coeffs, p)
        except DecodeError:
            return None

    clean = np.where(ys < 0, 0, ys)
    # common case: the first t+1 symbols are already genuine
    out = accept(_interpolate(xs[:k], clean[:k]))
    if out is not None:
        return out
    # fast path: locate the corrupted positions on random combinations of stripes
    for seed in (1, 2):
        comb = _combine_stripes(clean, seed)
        poly = _berlekamp_welch(xs, comb, k, e)
        if poly is None:
            continue
        good = [j for j in range(m) if gf.poly_eval(poly, xs[j]) == comb[j] and ys[j, 0] >= 0]
        if len(good) < k:
            continue
        pick = good[:k]
        coeffs = _interpolate([xs[j] for j in pick], clean[pick])
        out = accept(coeffs)
        if out is not None:
            return out
    # exact path: decode every stripe on its own
    cols = []
    for s in range(stripes):
        poly = _berlekamp_welch(xs, clean[:, s].tolist(), k, e)
        if poly is None:
            raise DecodeError("no codeword within the correction radius")
        cols.append(poly)
    out = accept(np.array(cols, dtype=np.int64))
    if out is None:
        raise DecodeError("decoded codeword does not agree with enough symbols")
    return out


def count_agreeing(symbols: Iterable[Symbol], v: Value, p: ProtocolParams) -> int:
    """How many of the given symbols match encode(v)."""
    syms = list(symbols)
    if not syms:
        return 0
    if not p.materialized:
        return sum(1 for s in syms if s.data == v.data)
    enc = encode(v, p)
    return sum(1 for s in syms if 1 <= s.index <= p.n and enc[s.index - 1].data == s.data)
