"""Dispatch from (operation, format) to a shipped micro-program."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from . import core, formats, posit, scalar
from .core import TaluState
from .microprog import MicroProgram, builtin_programs, run_microprogram


class UnsupportedOperation(core.TaluError):
    pass


@dataclass
class ExecResult:
    bits: int
    cycles: int  # arithmetic program only
    decode_cycles: int
    program: str
    trace: Optional[List[core.TraceRow]] = None

    @property
    def total_cycles(self) -> int:
        return self.decode_cycles + self.cycles


def find_program(operation: str, fmt: formats.Format) -> MicroProgram:
    try:
        return builtin_programs()[(operation.upper(), fmt.name)]
    except KeyError:
        raise UnsupportedOperation(f"no program for {operation.upper()} on {fmt.name}") from None


def supported_pairs():
    return sorted(builtin_programs())


def _load_float(state: TaluState, base: int, bits: int, desc: scalar.FloatDescriptor) -> None:
    """Float fields sit at fixed bit positions, so the load is wiring only."""
    dec = scalar.float_decode(bits, desc)
    sign = bits >> (desc.total - 1)
    abs_bits = bits & (desc.sign_bit - 1)
    if isinstance(dec, scalar.FloatSpecial):
        flag = {"zero": core.FLAG_ZERO, "nan": core.FLAG_NAR, "inf": core.FLAG_INF}[dec.kind]
        regs = (sign | flag | (abs_bits << 8), 0, 0, 0)
    else:
        regs = (sign | (abs_bits << 8), dec.exponent, 0, dec.significand)
    for off, value in enumerate(regs):
        core.trf_write(state, base + off, value)


def load_operands(state: TaluState, fmt: formats.Format, a: int, b: int) -> int:
    """Reconfigure for ``fmt`` and stage both operands.  Returns decode cycles."""
    mask = (1 << fmt.width) - 1
    for name, v in (("a", a), ("b", b)):
        if not 0 <= v <= mask:
            raise ValueError(f"operand {name}={v:#x} does not fit in {fmt.width} bits")
    state.posit_en = fmt.kind == "posit"
    core.trf_write(state, core.REG_A_RAW, a)
    core.trf_write(state, core.REG_B_RAW, b)
    if fmt.kind == "posit":
        cfg = fmt.config
        _, _, cycles = core.decode_posit_pair_on_talu(state, posit.PositWord(a, cfg), posit.PositWord(b, cfg))
        return cycles
    if fmt.kind == "float":
        _load_float(state, core.REG_A_FIELDS, a, fmt.desc)
        _load_float(state, core.REG_B_FIELDS, b, fmt.desc)
    return 0


def exec_op(state: TaluState, operation: str, fmt, a: int, b: int = 0) -> ExecResult:
    """Run one scalar op.  ``a``/``b`` are raw bit patterns of ``fmt``."""
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    program = find_program(operation, fmt)
    if fmt.kind == "posit" and fmt.width not in (8, 16):
        raise UnsupportedOperation(f"{fmt.name}: arithmetic programs cover 8- and 16-bit posits")
    decode = load_operands(state, fmt, a, b)
    if decode:
        state.advance(decode)
    out, cycles = run_microprogram(state, program)
    return ExecResult(out & ((1 << fmt.width) - 1), cycles, decode, program.name,
                      state.trace)


def reference_op(operation: str, fmt, a: int, b: int = 0) -> int:
    """The oracle result for the same op, computed without the TALU."""
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    op = operation.upper()
    mask = (1 << fmt.width) - 1
    if fmt.kind == "posit":
        pa, pb = posit.PositWord(a, fmt.config), posit.PositWord(b, fmt.config)
        if op == "ADD":
            return posit.posit_add(pa, pb).bits
        if op == "MUL":
            return posit.posit_mul(pa, pb).bits
    elif fmt.kind == "float":
        if op == "ADD":
            return scalar.float_add(a, b, fmt.desc)
        if op == "MUL":
            return scalar.float_mul(a, b, fmt.desc)
    else:
        table = {
            "ADD": lambda: scalar.int_add(a, b, fmt.desc),
            "MUL": lambda: scalar.int_mul(a, b, fmt.desc),
            "AND": lambda: a & b,
            "OR": lambda: a | b,
            "XOR": lambda: a ^ b,
            "NOT": lambda: ~a & mask,
            "COMP": lambda: int(a >= b),
        }
        if op in table:
            return table[op]()
    raise UnsupportedOperation(f"no reference for {op} on {fmt.name}")
