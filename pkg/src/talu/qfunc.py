"""Q-function evaluation and the operand-to-argument mappings of both clusters.

A Q slot compares two weighted sums::

    Q(p, Z0, X, Z1, Y) = [Z0 + sum_j 2^j X_j >= Z1 + sum_j 2^j Y_j]

Every TALU operation is a set of such comparisons, one per slot.  The
mapping tables below say how the Input Generator turns operand bits into
the (Z0, X, Z1, Y) bundle for slot ``i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

NUM_SLOTS = 8


class Cluster(enum.Enum):
    PC = "PC"
    SC = "SC"


class Opcode(enum.Enum):
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    COMP = "COMP"
    ADD_CARRY = "ADD_CARRY"
    XOR_STEP1 = "XOR_STEP1"
    POSIT_DECODE = "POSIT_DECODE"
    ADD_SUM = "ADD_SUM"
    XOR_STEP2 = "XOR_STEP2"


PC_OPCODES = frozenset({
    Opcode.AND, Opcode.OR, Opcode.NOT, Opcode.COMP,
    Opcode.ADD_CARRY, Opcode.XOR_STEP1, Opcode.POSIT_DECODE,
})
SC_OPCODES = frozenset({Opcode.ADD_SUM, Opcode.XOR_STEP2})


def home_cluster(opcode: Opcode) -> Cluster:
    return Cluster.PC if opcode in PC_OPCODES else Cluster.SC


class MappingError(ValueError):
    pass


class _QFields(NamedTuple):
    p: int
    z0: int
    x: int
    z1: int
    y: int


class QArgs(_QFields):
    """One slot's comparator inputs; X and Y are p-bit vectors packed as ints."""

    __slots__ = ()

    def __new__(cls, p: int, z0: int, x: int, z1: int, y: int):
        if not 1 <= p <= NUM_SLOTS:
            raise MappingError(f"slice width p={p} outside 1..8")
        limit = 1 << p
        if not (0 <= x < limit and 0 <= y < limit):
            raise MappingError(f"X/Y must be {p}-bit vectors")
        if not (0 <= z0 <= limit and 0 <= z1 <= limit):
            raise MappingError("Z0/Z1 outside comparator range")
        return super().__new__(cls, p, z0, x, z1, y)


def eval_q(args: QArgs) -> int:
    # X and Y are already packed integers, so the weighted sums are just X, Y
    return int(args.z0 + args.x >= args.z1 + args.y)


def eval_q_bitwise(args: QArgs) -> int:
    """Same predicate, summing 2^j over the individual bits (used as a cross-check)."""
    lhs = args.z0 + sum(((args.x >> j) & 1) << j for j in range(args.p))
    rhs = args.z1 + sum(((args.y >> j) & 1) << j for j in range(args.p))
    return int(lhs >= rhs)


def decode_threshold(p: int, i: int) -> int:
    """Constant compared against T in decode slot i: 2^(p-1)-1-(2^i-1)."""
    return (1 << (p - 1)) - 1 - ((1 << i) - 1)


@lru_cache(maxsize=None)
def _decode_thresholds(p: int) -> tuple:
    return tuple(decode_threshold(p, i) for i in range(p - 1))


def map_operation(opcode: Opcode, a: int, b: int, i: int, carry_in: int = 0,
                  p: int = 8, aux: int = 0) -> QArgs:
    """Build the Q arguments of slot ``i`` for ``opcode``.

    ``aux`` carries the pipeline-register contents that step-2 operations
    consume: the carry vector (bit j = C_j, j = 0..p) for ADD_SUM and the
    AND_i vector for XOR_STEP2.  For POSIT_DECODE ``a`` is the (p-1)-bit
    window T, slots run over i = 0..p-2, and p may be 9 so that a cluster
    can scan a full 8-bit window (the low half of a 16-bit posit).
    """
    opcode = _opcode(opcode)
    if opcode is Opcode.POSIT_DECODE:
        if not 0 <= i <= p - 2:
            raise MappingError(f"decode slot {i} out of range for p={p}")
    elif not 0 <= i < p:
        raise MappingError(f"slot {i} out of range for p={p}")
    return _MAPPINGS[opcode](a, b, i, carry_in, p, aux)


def _opcode(opcode) -> Opcode:
    if isinstance(opcode, Opcode):
        return opcode
    try:
        return Opcode(opcode)
    except ValueError:
        raise MappingError(f"unknown opcode {opcode!r}") from None


def _low(i):
    return (1 << (i + 1)) - 1


# Per-opcode (a, b, i, carry_in, p, aux) -> QArgs.  Step-2 slots weigh one
# input by 2, so a step-2 slot is at least 2 inputs wide.
_MAPPINGS = {
    Opcode.POSIT_DECODE: lambda a, b, i, c, p, aux: QArgs(min(p, NUM_SLOTS), 0, a & ((1 << (p - 1)) - 1), 0,
                                                          _decode_thresholds(p)[i]),
    Opcode.AND: lambda a, b, i, c, p, aux: QArgs(p, 0, (a >> i) & 1, 1, 1 - ((b >> i) & 1)),
    Opcode.XOR_STEP1: lambda a, b, i, c, p, aux: QArgs(p, 0, (a >> i) & 1, 1, 1 - ((b >> i) & 1)),
    Opcode.OR: lambda a, b, i, c, p, aux: QArgs(p, 0, (a >> i) & 1, 0, 1 - ((b >> i) & 1)),
    Opcode.NOT: lambda a, b, i, c, p, aux: QArgs(p, 0, 1 - ((b >> i) & 1), 1, 0),
    Opcode.COMP: lambda a, b, i, c, p, aux: QArgs(p, 0, a & _low(i), 0, b & _low(i)),
    Opcode.ADD_CARRY: lambda a, b, i, c, p, aux: QArgs(p, c & 1, a & _low(i), 1, ~b & _low(i)),
    Opcode.ADD_SUM: lambda a, b, i, c, p, aux: QArgs(
        max(p, 2), (a >> i) & 1, (b >> i) & 1, 0, (((aux >> (i + 1)) & 1) << 1) | (1 - ((aux >> i) & 1))),
    Opcode.XOR_STEP2: lambda a, b, i, c, p, aux: QArgs(max(p, 2), (a >> i) & 1, (b >> i) & 1, 1,
                                                       ((aux >> i) & 1) << 1),
}


@dataclass
class ClusterRequest:
    opcode: Opcode
    a: int = 0
    b: int = 0
    p: int = 8
    carry_in: int = 0
    aux: int = 0
    enabled: Optional[Sequence[bool]] = None
    slots: list = field(default_factory=list)

    def build(self) -> list:
        """Populate ``slots`` with one QArgs (or None when disabled) per slot."""
        opcode = _opcode(self.opcode)
        width = self.p - 1 if opcode is Opcode.POSIT_DECODE else self.p
        if width > NUM_SLOTS:
            raise MappingError("a cluster has only 8 Q slots")
        mask = self.enabled if self.enabled is not None else [True] * width
        if width and not any(mask):
            self.slots = [None] * width
            return self.slots
        slot = _MAPPINGS[opcode]
        a, b, c, p, aux = self.a, self.b, self.carry_in, self.p, self.aux
        self.slots = [slot(a, b, i, c, p, aux) if mask[i] else None for i in range(width)]
        return self.slots


def eval_cluster(request: ClusterRequest) -> Optional[int]:
    """Evaluate every enabled slot; slot i drives output bit i.

    Returns None when no slot is enabled.
    """
    slots = request.slots or request.build()
    if not any(s is not None for s in slots):
        return None
    out = 0
    for i, args in enumerate(slots):
        if args is not None and eval_q(args):
            out |= 1 << i
    return out


# Cached whole-cluster evaluations used by the simulator hot path.  The
# tables are filled lazily from eval_cluster, so every result still comes
# out of the Q-slot mappings above.

_CLUSTER_CACHE: dict = {}


def cluster_op(opcode: Opcode, a: int, b: int, p: int = 8, carry_in: int = 0, aux: int = 0) -> int:
    key = (opcode.value, a, b, p, carry_in, aux)
    out = _CLUSTER_CACHE.get(key)
    if out is None:
        out = _CLUSTER_CACHE[key] = eval_cluster(ClusterRequest(opcode, a, b, p, carry_in, aux)) or 0
    return out


def clear_cluster_cache() -> None:
    _CLUSTER_CACHE.clear()


def add_carries(a: int, b: int, carry_in: int, p: int = 8) -> int:
    """Carry vector from the ADD (Step 1) mapping: bit j holds C_j, bit 0 is C0."""
    return (cluster_op(Opcode.ADD_CARRY, a, b, p, carry_in) << 1) | (carry_in & 1)


def add_sum(a: int, b: int, carries: int, p: int = 8) -> int:
    return cluster_op(Opcode.ADD_SUM, a, b, p, 0, carries)


def xor_bits(a: int, b: int, p: int = 8) -> int:
    ands = cluster_op(Opcode.XOR_STEP1, a, b, p)
    return cluster_op(Opcode.XOR_STEP2, a, b, p, 0, ands)


def decode_vector(t: int, p: int) -> int:
    """V bits for a (p-1)-bit window T; slot i holds V_i."""
    return cluster_op(Opcode.POSIT_DECODE, t, 0, p)
