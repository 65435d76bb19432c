"""TALU datapath state and the posit decode sequence.

The state holds the TALU register file (TRF), the inter-cluster pipeline
registers, the regime LUT and the cycle counter.  Decode follows the
hardware order: complement-select, threshold comparisons on the cluster
slots, LUT lookup, shift by run length + 1, TRF write-back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import posit, qfunc
from .qfunc import Cluster, Opcode

TRF_SIZE = 16
TRF_WIDTH = 32
TRF_MASK = (1 << TRF_WIDTH) - 1

# TRF layout used by the loader and every shipped program
REG_A_RAW, REG_B_RAW = 0, 1
REG_A_FIELDS, REG_B_FIELDS = 2, 6  # flags|abs<<8, scale/K, E, significand
REG_RESULT = 15

FLAG_SIGN, FLAG_ZERO, FLAG_NAR, FLAG_INF = 1, 2, 4, 8


class TaluError(Exception):
    pass


class UnsupportedWidthError(TaluError):
    pass


class TRFError(TaluError):
    pass


class HazardError(TaluError):
    pass


def default_regime_lut() -> dict:
    return {pop: pop - 1 for pop in range(1, 8)}


@dataclass
class TraceRow:
    cycle: int
    cluster: str
    opcode: str
    inputs: str
    outputs: str


@dataclass
class TaluState:
    trf: List[int] = field(default_factory=lambda: [0] * TRF_SIZE)
    pc_pipeline: Optional[int] = None
    sc_pipeline: Optional[int] = None
    regime_lut: dict = field(default_factory=default_regime_lut)
    cycle_counter: int = 0
    posit_en: bool = False
    rw: int = 1  # 1 read, 0 write
    carry_flag: int = 0
    trace: Optional[List[TraceRow]] = None

    def advance(self, cycles: int) -> None:
        if cycles < 0:
            raise TaluError("cycle counter cannot go backwards")
        self.cycle_counter += cycles

    def record(self, cycle: int, cluster: str, opcode: str, inputs: str, outputs: str) -> None:
        if self.trace is not None:
            self.trace.append(TraceRow(self.cycle_counter + cycle, cluster, opcode, inputs, outputs))


def _check_reg(reg: int) -> None:
    if not isinstance(reg, int) or not 0 <= reg < TRF_SIZE:
        raise TRFError(f"TRF register r{reg} out of range 0..{TRF_SIZE - 1}")


def trf_read(state: TaluState, reg: int) -> int:
    _check_reg(reg)
    state.rw = 1
    return state.trf[reg]


def trf_write(state: TaluState, reg: int, word: int) -> None:
    _check_reg(reg)
    state.rw = 0
    state.trf[reg] = word & TRF_MASK


def lut_lookup(state: TaluState, v: int) -> int:
    """K for a decode V vector: the LUT is keyed by popcount(V)."""
    pop = bin(v).count("1")
    if pop == 0:
        raise AssertionError("V vector has no set bit; T always starts with a 1")
    try:
        return state.regime_lut[pop]
    except KeyError:
        raise AssertionError(f"popcount {pop} outside the 7-entry regime LUT") from None


def shifter_extract(state: TaluState, body: int, run_len: int, n: int, es: int) -> Tuple[int, int, int, int]:
    """Shift body[n-2:0] left by run_len + 1 and slice out E and F.

    Returns (E, exponent_len, F, fraction_len).  E is left-aligned to es
    bits when fewer than es bits survive the shift.
    """
    if run_len < 1:
        raise ValueError("run length must be >= 1")
    width = n - 1
    remaining = max(0, width - (run_len + 1))
    window = (body << (run_len + 1)) & ((1 << width) - 1)
    exp_len = min(es, remaining)
    e_bits = window >> (width - exp_len) if exp_len else 0
    frac_len = remaining - exp_len
    f_bits = (window >> (width - remaining)) & ((1 << frac_len) - 1) if frac_len else 0
    return e_bits << (es - exp_len), exp_len, f_bits, frac_len


def _window_run(state: TaluState, v: int, width: int) -> int:
    """Run length seen in one decode window: all-zero and all-one V are
    resolved by the Combiner logic, everything else by the LUT."""
    if v == 0:
        return 0
    if v == (1 << width) - 1:
        return width
    return lut_lookup(state, v) + 1


def combiner_merge(state: TaluState, v_hi: int, v_lo: int, lo_width: int = 8) -> int:
    """Total leading run length of a 16-bit T from the two cluster V vectors.

    The high window holds 7 bits.  If its run covers all 7, the low-window
    run continues it; otherwise the low half is ignored.
    """
    run_hi = lut_lookup(state, v_hi) + 1
    if run_hi < 7:
        return run_hi
    return 7 + _window_run(state, v_lo, lo_width)


def _complement_select(body: int, n: int) -> Tuple[int, int]:
    """Input Generator: T = body if body[n-2] = 1 else ~body (n-1 bits)."""
    lead = (body >> (n - 2)) & 1
    low = (1 << (n - 1)) - 1
    return lead, (body & low) if lead else (~body & low)


def _windows(n: int) -> List[Tuple[int, int]]:
    """(shift, width) of each decode window of T[n-2:0], most significant first."""
    rest = (n - 1 - 7) // 8
    wins = [(n - 1 - 7, 7)]
    for j in range(rest):
        wins.append((8 * (rest - 1 - j), 8))
    return wins


def _decode_cluster(state: TaluState, cycle: int, cluster: Cluster, t_window: int, width: int) -> int:
    p = width + 1
    v = qfunc.decode_vector(t_window, p)
    state.record(cycle, cluster.value, Opcode.POSIT_DECODE.value, f"T={t_window:0{width}b}", f"V={v:0{width}b}")
    return v


def _finish_fields(state, word, lead, body, run, sign) -> posit.PositFields:
    n, es = word.config.n, word.config.es
    k = run - 1 if lead else -run
    e, e_len, f, f_len = shifter_extract(state, body, run, n, es)
    return posit.PositFields(sign, k, run, e, e_len, f, f_len, run < n - 1)


def _special(word: posit.PositWord):
    if word.bits == 0:
        return posit.Zero
    if word.bits == word.config.nar_bits:
        return posit.NaR
    return None


def decode_posit_on_talu(state: TaluState, word: posit.PositWord, cluster: Cluster = Cluster.PC,
                         base_reg: Optional[int] = None, cycle_offset: int = 0):
    """Decode one 8- or 16-bit posit.  Returns (fields, cycles).

    8-bit: cycle 0 runs the seven threshold comparisons on one cluster,
    cycle 1 does LUT lookup, shift and write-back.  16-bit: both clusters
    compare concurrently (7 high bits on PC, 8 low bits on SC), then the
    two LUT lookups, the Combiner merge, the shift and the write-back take
    one cycle each.  Zero and NaR leave the pipeline with their pattern
    flags set and empty fields.
    """
    n = word.config.n
    if not state.posit_en:
        raise TaluError("posit_en is clear; reconfigure the TALU for posit mode first")
    if n not in (8, 16):
        raise UnsupportedWidthError(f"single-pass decode handles 8- and 16-bit posits, got {n}")
    sign = word.bits >> (n - 1)
    body = (-word.bits) & word.config.mask if sign else word.bits
    lead, t = _complement_select(body, n)
    cycles = 2 if n == 8 else 6
    special = _special(word)
    if n == 8:
        v = _decode_cluster(state, cycle_offset, cluster, t, 7)
        if special is None:
            run = lut_lookup(state, v) + 1
            state.record(cycle_offset + 1, "STRUCT", "LUT_LOOKUP", f"V={v:07b}", f"K={run - 1}")
    else:
        hi_shift, _ = _windows(16)[0]
        v_hi = _decode_cluster(state, cycle_offset, Cluster.PC, t >> hi_shift, 7)
        v_lo = _decode_cluster(state, cycle_offset, Cluster.SC, t & 0xFF, 8)
        if special is None:
            state.record(cycle_offset + 1, "STRUCT", "LUT_LOOKUP", f"V={v_hi:07b}", "")
            state.record(cycle_offset + 2, "STRUCT", "LUT_LOOKUP", f"V={v_lo:08b}", "")
            run = combiner_merge(state, v_hi, v_lo)
            state.record(cycle_offset + 3, "STRUCT", "COMBINE", f"Vhi={v_hi:07b} Vlo={v_lo:08b}", f"L={run}")
    result = special if special is not None else _finish_fields(state, word, lead, body, run, sign)
    state.record(cycle_offset + cycles - 1, "STRUCT", "SHIFT", f"P={word.bits:0{n}b}", _fields_text(result))
    if base_reg is not None:
        write_fields(state, base_reg, word, result)
        state.record(cycle_offset + cycles - 1, "STRUCT", "TRF_WRITE", f"r{base_reg}..r{base_reg + 3}", "")
    return result, cycles


def decode_posit_pair_on_talu(state: TaluState, a: posit.PositWord, b: posit.PositWord):
    """Decode both operands of a binary op; returns (fields_a, fields_b, cycles).

    8-bit operands decode together (PC takes A, SC takes B) in 2 cycles.
    16-bit operands need both clusters each, so they decode one after the
    other for 12 cycles.
    """
    if a.config.n == 8:
        fa, _ = decode_posit_on_talu(state, a, Cluster.PC, REG_A_FIELDS)
        fb, _ = decode_posit_on_talu(state, b, Cluster.SC, REG_B_FIELDS)
        return fa, fb, 2
    fa, ca = decode_posit_on_talu(state, a, Cluster.PC, REG_A_FIELDS)
    fb, cb = decode_posit_on_talu(state, b, Cluster.PC, REG_B_FIELDS, cycle_offset=ca)
    return fa, fb, ca + cb


def decode_posit_multipass(state: TaluState, word: posit.PositWord):
    """Wide posit decode (32-bit) in 8-bit window passes; returns (fields, cycles).

    Windows are compared two per cycle (PC and SC), then each window V goes
    through the LUT in turn, followed by one Combiner, one shift and one
    write-back cycle.  No cycle budget is published for this width.
    """
    n = word.config.n
    if not state.posit_en:
        raise TaluError("posit_en is clear; reconfigure the TALU for posit mode first")
    if n < 16 or (n - 1 - 7) % 8:
        raise UnsupportedWidthError(f"multi-pass decode expects n = 8k with k >= 2, got {n}")
    sign = word.bits >> (n - 1)
    body = (-word.bits) & word.config.mask if sign else word.bits
    lead, t = _complement_select(body, n)
    wins = _windows(n)
    passes = (len(wins) + 1) // 2
    cycles = passes + len(wins) + 3
    special = _special(word)
    vs = []
    for idx, (shift, width) in enumerate(wins):
        cl = Cluster.PC if idx % 2 == 0 else Cluster.SC
        vs.append(_decode_cluster(state, idx // 2, cl, (t >> shift) & ((1 << width) - 1), width))
    if special is not None:
        return special, cycles
    run = 0
    for (shift, width), v in zip(wins, vs):
        seg = _window_run(state, v, width) if run else lut_lookup(state, v) + 1
        run += seg
        if seg < width:
            break
    return _finish_fields(state, word, lead, body, run, sign), cycles


def _fields_text(fields) -> str:
    if not isinstance(fields, posit.PositFields):
        return repr(fields)
    return f"S={fields.sign} K={fields.regime_value} E={fields.exponent} F={fields.fraction}/{fields.fraction_len}"


def posit_sig(fields: posit.PositFields, n: int, es: int) -> int:
    """Significand with the hidden bit, fraction left-aligned to n-3-es bits."""
    fmax = max(0, n - 3 - es)
    return (1 << fmax) | (fields.fraction << (fmax - fields.fraction_len))


def write_fields(state: TaluState, base: int, word: posit.PositWord, fields) -> None:
    """Store flags|abs<<8, K, E and the significand at r[base..base+3]."""
    cfg = word.config
    sign = word.bits >> (cfg.n - 1)
    abs_bits = (-word.bits) & cfg.mask if sign else word.bits
    if fields is posit.Zero:
        regs = (FLAG_ZERO, 0, 0, 0)
    elif fields is posit.NaR:
        regs = (FLAG_NAR | FLAG_SIGN, 0, 0, 0)
    else:
        regs = (sign | (abs_bits << 8), fields.regime_value, fields.exponent, posit_sig(fields, cfg.n, cfg.es))
    for off, value in enumerate(regs):
        trf_write(state, base + off, value)


def write_trace_csv(rows: Sequence[TraceRow], fh) -> None:
    import csv

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["cycle", "cluster", "opcode", "inputs", "outputs"])
    for r in rows:
        w.writerow([r.cycle, r.cluster, r.opcode, r.inputs, r.outputs])
