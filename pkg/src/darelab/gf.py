"""Arithmetic in GF(2^16), scalar (python ints) and vectorised (numpy int64 arrays)."""

from __future__ import annotations

import numpy as np

PRIMITIVE_POLY = 0x1100B  # x^16 + x^12 + x^3 + x + 1
ORDER = (1 << 16) - 1


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(2 * ORDER, dtype=np.int64)
    log = np.zeros(ORDER + 1, dtype=np.int64)
    x = 1
    for i in range(ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x10000:
            x ^= PRIMITIVE_POLY
    exp[ORDER:] = exp[:ORDER]
    return exp, log


EXP, LOG = _build_tables()
_EXP = EXP.tolist()
_LOG = LOG.tolist()


def mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^16)")
    return _EXP[ORDER - _LOG[a]]


def div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(2^16)")
    if a == 0:
        return 0
    return _EXP[_LOG[a] - _LOG[b] + ORDER]


def pow_(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return _EXP[(_LOG[a] * e) % ORDER]


def poly_eval(coeffs: list[int], x: int) -> int:
    """Evaluate sum(coeffs[j] * x^j) by Horner's rule."""
    acc = 0
    for c in reversed(coeffs):
        acc = mul(acc, x) ^ c
    return acc


def vmul(a: np.ndarray, b: np.ndarray | int) -> np.ndarray:
    """Elementwise product of arrays (broadcasting) or of an array and a scalar."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = EXP[LOG[a] + LOG[b]]
    return np.where((a == 0) | (b == 0), 0, out)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over the field: (r x k) @ (k x c)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for j in range(a.shape[1]):
        out ^= vmul(a[:, j : j + 1], b[j : j + 1, :])
    return out


def vandermonde(xs: list[int], k: int) -> list[list[int]]:
    return [[pow_(x, j) for j in range(k)] for x in xs]


def mat_inverse(m: list[list[int]]) -> list[list[int]]:
    """Gauss-Jordan inverse of a square matrix over the field."""
    size = len(m)
    aug = [list(row) + [1 if i == j else 0 for j in range(size)] for i, row in enumerate(m)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col]), None)
        if pivot is None:
            raise ValueError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = inv(aug[col][col])
        aug[col] = [mul(v, scale) for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col]:
                f = aug[r][col]
                pr = aug[col]
                aug[r] = [v ^ mul(f, w) for v, w in zip(aug[r], pr)]
    return [row[size:] for row in aug]


def solve(rows: list[list[int]], rhs: list[int]) -> list[int] | None:
    """Any solution of rows @ x = rhs, or None when the system is inconsistent."""
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, nrows) if aug[i][col]), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        scale = inv(aug[r][col])
        aug[r] = [mul(v, scale) for v in aug[r]]
        pr = aug[r]
        for i in range(nrows):
            if i != r and aug[i][col]:
                f = aug[i][col]
                aug[i] = [v ^ mul(f, w) for v, w in zip(aug[i], pr)]
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if aug[i][ncols]:
            return None
    x = [0] * ncols
    for i, col in enumerate(pivots):
        x[col] = aug[i][ncols]
    return x


def poly_divmod(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Quotient and remainder; coefficient lists are lowest degree first."""
    num = list(num)
    while den and den[-1] == 0:
        den = den[:-1]
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    lead_inv = inv(den[-1])
    dd = len(den) - 1
    quot = [0] * max(len(num) - dd, 1)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c == 0:
            continue
        q = mul(c, lead_inv)
        quot[i - dd] = q
        for j, d in enumerate(den):
            num[i - dd + j] ^= mul(q, d)
    return quot, num[:dd]
