"""Shared vocabulary: protocol parameters, values, and the message size model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional

HEADER_BITS = 64
# codec word size in bits (GF(2^16) symbols)
WORD_BITS = 16
# values above this size are carried as compact tokens; sizes are still charged at L
MATERIALIZE_LIMIT_BITS = 64 * 1024 * 8


class ParamError(ValueError):
    """Raised for parameter sets that violate the model's invariants."""


def default_group_size(n: int) -> int:
    return math.isqrt(n - 1) + 1 if n > 1 else 1


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    t: int
    X: Optional[int] = None
    Y: Optional[int] = None
    delta: int = 10
    gst: int = 0
    L: int = 1024
    kappa: int = 256
    proof_kappa: int = 2048
    unknown_delta_mode: bool = False
    # starting estimate for delta when unknown_delta_mode is on
    delta_guess: Optional[int] = None
    # agreement view length, in multiples of the (estimated) delta
    agreement_view_factor: int = 8

    def __post_init__(self) -> None:
        if self.t < 1 or self.n != 3 * self.t + 1:
            raise ParamError(f"need n = 3t + 1 with t >= 1, got n={self.n}, t={self.t}")
        g = default_group_size(self.n)
        if self.X is None:
            object.__setattr__(self, "X", g)
        if self.Y is None:
            object.__setattr__(self, "Y", g)
        if not 1 <= self.X <= self.n or not 1 <= self.Y <= self.n:
            raise ParamError(f"X and Y must lie in [1, n], got X={self.X}, Y={self.Y}")
        if self.kappa <= math.ceil(math.log2(self.n)):
            raise ParamError(f"kappa={self.kappa} must exceed log2(n)")
        if self.kappa % 8:
            raise ParamError("kappa must be a whole number of bytes")
        if self.delta <= 0 or self.gst < 0:
            raise ParamError("delta must be positive and gst non-negative")
        if self.L < (self.t + 1) * WORD_BITS:
            raise ParamError(f"L={self.L} below (t+1)*{WORD_BITS} bits")
        if self.proof_kappa < 0:
            raise ParamError("proof_kappa must be non-negative")
        if self.delta_guess is not None and self.delta_guess <= 0:
            raise ParamError("delta_guess must be positive")
        if self.agreement_view_factor < 1:
            raise ParamError("agreement_view_factor must be >= 1")

    @classmethod
    def for_n(cls, n: int, **kw: Any) -> "ProtocolParams":
        if (n - 1) % 3:
            raise ParamError(f"n={n} is not of the form 3t + 1")
        return cls(n=n, t=(n - 1) // 3, **kw)

    @property
    def quorum(self) -> int:
        return 2 * self.t + 1

    @property
    def symbol_bits(self) -> int:
        return -(-self.L // (self.t + 1))

    @property
    def num_groups(self) -> int:
        return -(-self.n // self.Y)

    @property
    def num_leader_views(self) -> int:
        return -(-self.n // self.X)

    @property
    def overlap(self) -> int:
        """Required overlap in a synchronized view (delta * n/Y + 3 delta)."""
        return self.delta * self.num_groups + 3 * self.delta

    @property
    def view_duration(self) -> int:
        return self.overlap + 2 * self.delta

    @property
    def materialized(self) -> bool:
        return self.L <= MATERIALIZE_LIMIT_BITS

    @property
    def proposal_bits(self) -> int:
        """Per-proposal length when this instance carries a signed vector."""
        return max(self.L // (self.n - self.t) - self.kappa, 0)

    def replace(self, **kw: Any) -> "ProtocolParams":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(kw)
        return ProtocolParams(**fields)


@dataclass(frozen=True)
class Value:
    """An L-bit value. Large values may be stood in for by a compact token."""

    data: bytes
    bits: int

    def __repr__(self) -> str:
        return f"Value({self.data[:8].hex()}.., bits={self.bits})"


class Kind(str, enum.Enum):
    DISPERSAL = "DISPERSAL"
    ACK = "ACK"
    CONFIRM = "CONFIRM"
    VIEW_COMPLETED = "VIEW-COMPLETED"
    ENTER_VIEW = "ENTER-VIEW"
    SYMBOL_SHARE = "SYMBOL-SHARE"
    SYMBOL_BCAST = "SYMBOL-BCAST"
    STARK_DISPERSAL = "STARK-DISPERSAL"
    STARK_ACK = "STARK-ACK"
    STARK_RETRIEVE = "STARK-RETRIEVE"
    AGR_STATUS = "AGR-STATUS"
    AGR_PROPOSE = "AGR-PROPOSE"
    AGR_VOTE = "AGR-VOTE"
    AGR_QC = "AGR-QC"
    AGR_DECIDE = "AGR-DECIDE"
    AGR_EPOCH_COMPLETED = "AGR-EPOCH-COMPLETED"
    AGR_ENTER_EPOCH = "AGR-ENTER-EPOCH"
    BASE_STATUS = "BASE-STATUS"
    BASE_PROPOSE = "BASE-PROPOSE"
    BASE_VOTE = "BASE-VOTE"
    BASE_QC = "BASE-QC"
    BASE_DECIDE = "BASE-DECIDE"
    BASE_EPOCH_COMPLETED = "BASE-EPOCH-COMPLETED"
    BASE_ENTER_EPOCH = "BASE-ENTER-EPOCH"
    PROPOSAL = "PROPOSAL"

    def __str__(self) -> str:
        return self.value


# (value-bearing part, number of kappa-sized objects, carries a proof)
# value parts: "L" full value, "S" one symbol, "P" a (hash, signature) pair
# payload, "V" one vector entry proposal, None nothing
_SIZE_TABLE: dict[Kind, tuple[Optional[str], int, bool]] = {
    Kind.DISPERSAL: ("L", 0, False),
    Kind.ACK: (None, 1, False),
    Kind.CONFIRM: (None, 2, False),
    Kind.VIEW_COMPLETED: (None, 1, False),
    Kind.ENTER_VIEW: (None, 2, False),
    Kind.SYMBOL_SHARE: ("S", 1, False),
    Kind.SYMBOL_BCAST: ("S", 1, False),
    Kind.STARK_DISPERSAL: ("S", 1, True),
    Kind.STARK_ACK: (None, 1, False),
    Kind.STARK_RETRIEVE: ("S", 1, True),
    Kind.AGR_STATUS: ("P", 1, False),
    Kind.AGR_PROPOSE: ("P", 1, False),
    Kind.AGR_VOTE: (None, 1, False),
    Kind.AGR_QC: (None, 2, False),
    Kind.AGR_DECIDE: ("P", 2, False),
    Kind.AGR_EPOCH_COMPLETED: (None, 1, False),
    Kind.AGR_ENTER_EPOCH: (None, 2, False),
    Kind.BASE_STATUS: ("L", 1, False),
    Kind.BASE_PROPOSE: ("L", 1, False),
    Kind.BASE_VOTE: (None, 1, False),
    Kind.BASE_QC: (None, 2, False),
    Kind.BASE_DECIDE: ("L", 2, False),
    Kind.BASE_EPOCH_COMPLETED: (None, 1, False),
    Kind.BASE_ENTER_EPOCH: (None, 2, False),
    Kind.PROPOSAL: ("V", 1, False),
}


def value_bits(kind: Kind, p: ProtocolParams) -> int:
    """The part of a message's size that scales with the value length."""
    part = _SIZE_TABLE[kind][0]
    if part is None:
        return 0
    if part == "L":
        return p.L
    if part == "S":
        return p.symbol_bits
    if part == "V":
        return p.proposal_bits
    # a (hash, threshold signature) pair rides in agreement payloads
    return 2 * p.kappa


def bit_size(kind: Kind, p: ProtocolParams) -> int:
    try:
        part, kappas, proof = _SIZE_TABLE[kind]
    except KeyError:
        raise TypeError(f"unknown message kind {kind!r}") from None
    size = value_bits(kind, p) + kappas * p.kappa + HEADER_BITS
    if proof:
        size += p.proof_kappa
    return size


def l_term_bits(kind: Kind, p: ProtocolParams) -> int:
    """Bits proportional to L (the pair payload of agreement is not)."""
    return 0 if _SIZE_TABLE[kind][0] == "P" else value_bits(kind, p)


@dataclass(slots=True)
class Message:
    kind: Kind
    sender: int
    receiver: int
    payload: tuple = field(default=())

    def size(self, p: ProtocolParams) -> int:
        return bit_size(self.kind, p)
