"""Micro-program text format, loader and cycle-level executor.

One op per line::

    <cycle> <PC|SC|BOTH|STRUCT> <OPCODE> <args...>   # comment

Header directives (``.name``, ``.format``, ``.operation``, ``.cycles``)
precede the ops.  Within a cycle the cluster ops read the start-of-cycle
TRF, then commit; the pipeline register takes this cycle's PC output; the
structural ops (Shifter, LUT, Combiner, TRF ports) run last, in file order,
and may read what the clusters just wrote.

Cluster operands::

    rN[.s]            8-bit slice s of register N (width from w=, default 8)
    #imm              immediate
    bit(rM,k)         bit k of rM broadcast over the slice
    gate(rA,rM,k)     rA when bit k of rM is set, else 0 (Input Generator masking)
    shl(rA,k)         rA shifted left by k
    mul4(rA,rT,rM,k)  radix-4 select of {0, rA, 2rA, rT} by bits k+1:k of rM
    ~X                invert X within the slice
    X^rM@k            invert X when bit k of rM is set

Carry-in for ADD_CARRY: ``cin=#0``, ``#1``, ``cf`` (carry flag written by the
last ADD_SUM), ``pipe`` (carry out held in the pipeline register from the
previous PC issue) or ``rM@k``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Dict, List, Optional, Tuple

from . import formats, posit, qfunc, scalar
from .core import (TRF_MASK, TRF_SIZE, HazardError,
                   TaluError, TaluState, TRFError)
from .qfunc import Opcode

OPERATIONS = ("DECODE", "ADD", "MUL", "AND", "OR", "NOT", "XOR", "COMP")
STRUCT_OPS = (
    "LUT_LOOKUP", "COMBINE", "SHIFT", "TRF_READ", "TRF_WRITE",
    "MOV", "SHL", "SHR", "SEXT", "SETF", "CSWAP", "ALIGN", "SHRP", "JOIN", "BIT",
    "PACK", "FINISH",
)


class ProgramError(TaluError):
    pass


class CycleMismatchError(TaluError):
    pass


@dataclass
class MicroOp:
    cycle: int
    cluster: str  # PC, SC, BOTH or STRUCT
    opcode: str
    args: Tuple[str, ...]
    line: int = 0
    run: Optional[Callable] = field(default=None, repr=False, compare=False)

    def text(self) -> str:
        return f"{self.cycle} {self.cluster} {self.opcode} {' '.join(self.args)}".rstrip()


@dataclass
class MicroProgram:
    name: str
    format: formats.Format
    operation: str
    ops: List[MicroOp]
    declared_cycles: int
    slack: int = 0
    notes: List[str] = field(default_factory=list)
    _schedule: Optional[list] = field(default=None, repr=False, compare=False)

    @property
    def scheduled_cycles(self) -> int:
        return max((op.cycle for op in self.ops), default=-1) + 1

    def schedule(self) -> List[Tuple[list, list]]:
        """Per cycle: (cluster op runners, structural op runners), cached."""
        if self._schedule is None:
            self._schedule = [([op.run for op in ops if op.cluster != "STRUCT"],
                               [op.run for op in ops if op.cluster == "STRUCT"]) for ops in self.by_cycle()]
        return self._schedule

    def by_cycle(self) -> List[List[MicroOp]]:
        cycles: List[List[MicroOp]] = [[] for _ in range(self.scheduled_cycles)]
        for op in self.ops:
            cycles[op.cycle].append(op)
        return cycles


# ---------------------------------------------------------------- operands

_REG = r"r(\d+)"
_OPERAND_RE = re.compile(
    r"^(?P<inv>~)?(?P<term>r\d+|#-?(?:0x[0-9a-fA-F]+|\d+)|[a-z0-9]+\([^)]*\))"
    r"(?:\.(?P<slice>\d+))?(?:\^r(?P<creg>\d+)@(?P<cbit>\d+))?$"
)


def _reg(text: str) -> int:
    m = re.fullmatch(_REG, text.strip())
    if not m:
        raise ProgramError(f"expected a register, got {text!r}")
    r = int(m.group(1))
    if r >= TRF_SIZE:
        raise TRFError(f"TRF register r{r} out of range 0..{TRF_SIZE - 1}")
    return r


def _int(text: str) -> int:
    return int(text.lstrip("#"), 0)


def _regbit(text: str) -> Tuple[int, int]:
    reg, _, bit = text.partition("@")
    if not bit:
        raise ProgramError(f"expected rM@k, got {text!r}")
    return _reg(reg), int(bit)


def _term(text: str) -> Callable[[List[int]], int]:
    if text.startswith("#"):
        v = _int(text) & TRF_MASK
        return lambda trf: v
    if text.startswith("r"):
        r = _reg(text)
        return lambda trf: trf[r]
    name, _, rest = text.partition("(")
    args = [a.strip() for a in rest.rstrip(")").split(",")]
    if name == "bit" and len(args) == 2:
        r, k = _reg(args[0]), int(args[1])
        return lambda trf: TRF_MASK if (trf[r] >> k) & 1 else 0
    if name == "gate" and len(args) == 3:
        ra, rm, k = _reg(args[0]), _reg(args[1]), int(args[2])
        return lambda trf: trf[ra] if (trf[rm] >> k) & 1 else 0
    if name == "shl" and len(args) == 2:
        ra, k = _reg(args[0]), int(args[1])
        return lambda trf: (trf[ra] << k) & TRF_MASK
    if name == "mul4" and len(args) == 4:
        ra, rt, rm, k = _reg(args[0]), _reg(args[1]), _reg(args[2]), int(args[3])

        def sel(trf):
            d = (trf[rm] >> k) & 3
            return (0, trf[ra], (trf[ra] << 1) & TRF_MASK, trf[rt])[d]
        return sel
    raise ProgramError(f"bad operand term {text!r}")


def parse_operand(text: str, width: int) -> Callable[[List[int]], int]:
    m = _OPERAND_RE.match(text)
    if not m:
        raise ProgramError(f"bad operand {text!r}")
    term = _term(m.group("term"))
    shift = 8 * int(m.group("slice") or 0)
    mask = (1 << width) - 1
    inv = bool(m.group("inv"))
    creg = m.group("creg")
    if creg is not None:
        cr, cb = int(creg), int(m.group("cbit"))
        if cr >= TRF_SIZE:
            raise TRFError(f"TRF register r{cr} out of range 0..{TRF_SIZE - 1}")

    def value(trf):
        v = (term(trf) >> shift) & mask
        if inv:
            v ^= mask
        if creg is not None and (trf[cr] >> cb) & 1:
            v ^= mask
        return v
    return value


def _dest(text: str, width: int) -> Tuple[int, int, int]:
    """(reg, shift, mask) of a destination slice rN[.s]."""
    reg, _, sl = text.partition(".")
    shift = 8 * int(sl) if sl else 0
    if shift + width > 32:
        raise ProgramError(f"slice {text} exceeds the 32-bit register")
    return _reg(reg), shift, ((1 << width) - 1) << shift


_KW_RE = re.compile(r"^(w|cin|k|if|mode|sw)=")


def _split_kw(args) -> Tuple[List[str], Dict[str, str]]:
    pos, kw = [], {}
    for a in args:
        if _KW_RE.match(a):
            key, _, val = a.partition("=")
            kw[key] = val
        else:
            pos.append(a)
    return pos, kw


# ----------------------------------------------------------- cluster ops

class _Ctx:
    """Per-cycle execution context shared by the compiled ops."""

    __slots__ = ("state", "trf", "pipe_prev", "pipe_next", "writes", "cf_next", "fmt", "tracing")

    def __init__(self, state: TaluState, fmt):
        self.state = state
        self.trf = state.trf
        self.pipe_prev: Optional[int] = None
        self.pipe_next: Optional[int] = None
        self.writes: List[Tuple[int, int, int]] = []
        self.cf_next: Optional[int] = None
        self.fmt = fmt
        self.tracing = state.trace is not None


def _cin_reader(text: str, width: int) -> Callable[[_Ctx], int]:
    if text in ("#0", "#1"):
        v = int(text[1])
        return lambda ctx: v
    if text == "cf":
        return lambda ctx: ctx.state.carry_flag
    if text == "pipe":
        def from_pipe(ctx):
            if ctx.pipe_prev is None:
                raise HazardError("cin=pipe with an empty pipeline register")
            return (ctx.pipe_prev >> width) & 1
        return from_pipe
    r, k = _regbit(text)
    return lambda ctx: (ctx.trf[r] >> k) & 1


def _compile_cluster(op: MicroOp) -> Callable[[_Ctx], None]:
    try:
        opcode = Opcode(op.opcode)
    except ValueError:
        raise ProgramError(f"line {op.line}: unknown cluster opcode {op.opcode}") from None
    pos, kw = _split_kw(op.args)
    width = int(kw.get("w", 8))
    if not 1 <= width <= 8:
        raise ProgramError(f"line {op.line}: slice width {width} outside 1..8")
    name = opcode.value
    cluster = op.cluster

    if opcode in (Opcode.ADD_CARRY, Opcode.XOR_STEP1) and cluster != "PC":
        raise ProgramError(f"line {op.line}: {name} drives the pipeline register and must issue on PC")
    if opcode in (Opcode.ADD_SUM, Opcode.XOR_STEP2) and cluster != "SC":
        raise ProgramError(f"line {op.line}: {name} reads the pipeline register and must issue on SC")

    def need(count):
        if len(pos) != count:
            raise ProgramError(f"line {op.line}: {name} takes {count} operands, got {len(pos)}")

    def trace(ctx, ins, out):
        ctx.state.record(op.cycle, cluster, name, ins, out)

    if opcode is Opcode.ADD_CARRY:
        need(2)
        fa, fb = parse_operand(pos[0], width), parse_operand(pos[1], width)
        cin = _cin_reader(kw.get("cin", "#0"), width)

        def run(ctx):
            a, b, c = fa(ctx.trf), fb(ctx.trf), cin(ctx)
            ctx.pipe_next = qfunc.add_carries(a, b, c, width)
            if ctx.tracing:
                trace(ctx, f"a={a:#x} b={b:#x} cin={c}", f"C={ctx.pipe_next:0{width + 1}b}")
        return run

    if opcode is Opcode.XOR_STEP1:
        need(2)
        fa, fb = parse_operand(pos[0], width), parse_operand(pos[1], width)

        def run(ctx):
            a, b = fa(ctx.trf), fb(ctx.trf)
            ctx.pipe_next = qfunc.cluster_op(Opcode.XOR_STEP1, a, b, width)
            if ctx.tracing:
                trace(ctx, f"a={a:#x} b={b:#x}", f"AND={ctx.pipe_next:#x}")
        return run

    if opcode is Opcode.POSIT_DECODE:
        if len(pos) not in (1, 2):
            raise ProgramError(f"line {op.line}: POSIT_DECODE takes [dest] T")
        p = width + 1
        ft = parse_operand(pos[-1], width)
        dest = _dest(pos[0], width) if len(pos) == 2 else None

        def run(ctx):
            t = ft(ctx.trf)
            v = qfunc.decode_vector(t, p)
            ctx.pipe_next = v
            if dest:
                ctx.writes.append((dest[0], dest[2], v << dest[1]))
            if ctx.tracing:
                trace(ctx, f"T={t:0{width}b}", f"V={v:0{width}b}")
        return run

    if opcode in (Opcode.ADD_SUM, Opcode.XOR_STEP2):
        need(3)
        dest = _dest(pos[0], width)
        fa, fb = parse_operand(pos[1], width), parse_operand(pos[2], width)
        is_add = opcode is Opcode.ADD_SUM

        def run(ctx):
            if ctx.pipe_prev is None:
                raise HazardError(f"line {op.line}: {name} with no PC step 1 on the previous cycle")
            a, b = fa(ctx.trf), fb(ctx.trf)
            if is_add:
                out = qfunc.add_sum(a, b, ctx.pipe_prev, width)
                ctx.cf_next = (ctx.pipe_prev >> width) & 1
            else:
                out = qfunc.cluster_op(Opcode.XOR_STEP2, a, b, width, 0, ctx.pipe_prev)
            ctx.writes.append((dest[0], dest[2], out << dest[1]))
            if ctx.tracing:
                trace(ctx, f"a={a:#x} b={b:#x} pipe={ctx.pipe_prev:#x}", f"r{dest[0]}={out:#x}")
        return run

    # single-step mappings
    if opcode is Opcode.NOT:
        need(2)
        dest = _dest(pos[0], width)
        fb = parse_operand(pos[1], width)
        fa = lambda trf: 0  # noqa: E731
    else:
        need(3)
        dest = _dest(pos[0], width)
        fa, fb = parse_operand(pos[1], width), parse_operand(pos[2], width)

    def run(ctx):
        a, b = fa(ctx.trf), fb(ctx.trf)
        out = qfunc.cluster_op(opcode, a, b, width)
        if cluster == "PC":
            ctx.pipe_next = out
        ctx.writes.append((dest[0], dest[2], out << dest[1]))
        if ctx.tracing:
            trace(ctx, f"a={a:#x} b={b:#x}", f"r{dest[0]}={out:#x}")
    return run


# -------------------------------------------------------- structural ops

def _signed(v: int, bits: int = 32) -> int:
    v &= (1 << bits) - 1
    return v - (1 << bits) if v >> (bits - 1) else v


def _round_rne(mag: int, shift: int) -> int:
    """mag >> shift, rounded to nearest with ties to even."""
    if shift <= 0:
        return mag << -shift
    q = mag >> shift
    rem = mag & ((1 << shift) - 1)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and q & 1):
        q += 1
    return q


def pack_posit(config: posit.PositConfig, scale: int, mag: int, frac_pos: int) -> int:
    """Magnitude pattern (n-1 bits) for mag * 2^(scale - frac_pos), RNE on the bit string.

    The significand is normalized to its leading one, then regime, exponent
    and fraction are laid out as one integer and the bits that do not fit
    are rounded off.  Saturates to minpos/maxpos.
    """
    if mag == 0:
        return 0
    n, es = config.n, config.es
    lead = mag.bit_length() - 1
    scale += lead - frac_pos
    if scale >= config.max_scale:
        return config.maxpos_bits
    if scale < -config.max_scale:
        return config.minpos_bits
    k, e = scale >> es, scale & ((1 << es) - 1)
    if k >= 0:
        regime, rlen = ((1 << (k + 1)) - 1) << 1, k + 2
    else:
        regime, rlen = 1, 1 - k
    head = (((regime << es) | e) << lead) | (mag & ((1 << lead) - 1))
    total = rlen + es + lead
    bits = _round_rne(head, total - (n - 1))
    return min(bits, config.maxpos_bits)


def pack_float(desc: scalar.FloatDescriptor, scale: int, mag: int, frac_pos: int) -> int:
    """Magnitude pattern (exponent|fraction) for mag * 2^(scale - frac_pos), RNE, overflow to Inf."""
    if mag == 0:
        return 0
    m = desc.frac_bits
    lead = mag.bit_length() - 1
    e = max(scale + lead - frac_pos, desc.emin)
    # the result LSB weighs 2^(e-m); carries out of the fraction bump the exponent
    q = _round_rne(mag, e - m - scale + frac_pos)
    if q >> m:
        bits = ((e + desc.bias - 1) << m) + q
    else:
        bits = q
    return min(bits, desc.inf_bits)


def _finish_posit(config, mag, sign, ra, rb, kind):
    nar = config.nar_bits
    if ra == nar or rb == nar:
        return nar
    if kind == "mul":
        if ra == 0 or rb == 0:
            return 0
    else:
        if ra == 0:
            return rb
        if rb == 0:
            return ra
    if mag == 0:
        return 0
    return (-mag) & config.mask if sign else mag


def _finish_float(desc, mag, sign, ra, rb, kind):
    da, db = scalar.float_decode(ra, desc), scalar.float_decode(rb, desc)
    special = scalar._special_result(da, db, desc, kind)
    if special is not None:
        return special
    if kind == "add":
        if isinstance(da, scalar.FloatSpecial):
            return rb
        if isinstance(db, scalar.FloatSpecial):
            return ra
        if mag == 0:  # exact cancellation
            return 0
    return (desc.sign_bit if sign else 0) | mag


def _compile_struct(op: MicroOp, fmt) -> Callable[[_Ctx], None]:
    name = op.opcode
    pos, kw = _split_kw(op.args)

    def need(count):
        if len(pos) != count:
            raise ProgramError(f"line {op.line}: {name} takes {count} arguments, got {len(pos)}")

    def put(ctx, reg, value):
        ctx.trf[reg] = value & TRF_MASK

    if name in ("TRF_READ", "TRF_WRITE"):
        regs = [_reg(a) for a in pos]

        def run(ctx):
            ctx.state.rw = 1 if name == "TRF_READ" else 0
            if ctx.tracing:
                ctx.state.record(op.cycle, "STRUCT", name, " ".join(pos), "")
        return run

    if name in ("LUT_LOOKUP", "COMBINE", "SHIFT"):
        raise ProgramError(f"line {op.line}: {name} is only issued by the decode sequence")

    if name == "MOV":
        need(2)
        d, src = _reg(pos[0]), parse_operand(pos[1], 32)
        return lambda ctx: put(ctx, d, src(ctx.trf))

    if name in ("SHL", "SHR", "SEXT", "BIT"):
        need(3)
        d, s, k = _reg(pos[0]), _reg(pos[1]), int(pos[2])
        if name == "SHL":
            return lambda ctx: put(ctx, d, ctx.trf[s] << k)
        if name == "SHR":
            return lambda ctx: put(ctx, d, ctx.trf[s] >> k)
        if name == "BIT":
            return lambda ctx: put(ctx, d, (ctx.trf[s] >> k) & 1)
        return lambda ctx: put(ctx, d, _signed(ctx.trf[s], k))

    if name == "SETF":
        need(2)
        d = _reg(pos[0])
        if pos[1] == "cf":
            return lambda ctx: put(ctx, d, ctx.state.carry_flag)
        if pos[1].startswith("pipe@"):
            k = int(pos[1][5:])

            def run(ctx):
                if ctx.pipe_next is None:
                    raise HazardError(f"line {op.line}: SETF from an idle pipeline register")
                put(ctx, d, (ctx.pipe_next >> k) & 1)
            return run
        raise ProgramError(f"line {op.line}: SETF source must be cf or pipe@k")

    if name == "CSWAP":
        need(2)
        a, b = _reg(pos[0]), _reg(pos[1])
        cond = kw.get("if")
        if not cond:
            raise ProgramError(f"line {op.line}: CSWAP needs if=[~]rM@k")
        negate = cond.startswith("~")
        cr, cb = _regbit(cond.lstrip("~"))

        def run(ctx):
            if ((ctx.trf[cr] >> cb) & 1) ^ negate:
                ctx.trf[a], ctx.trf[b] = ctx.trf[b], ctx.trf[a]
        return run

    if name == "ALIGN":
        need(3)
        d, s, amt = _reg(pos[0]), _reg(pos[1]), _reg(pos[2])

        def run(ctx):
            v, sh = ctx.trf[s], ctx.trf[amt] & 0xFF
            if sh >= 32:
                out = 1 if v else 0
            else:
                out = (v >> sh) | (1 if v & ((1 << sh) - 1) else 0)
            put(ctx, d, out)
        return run

    if name == "SHRP":
        need(3)
        hi, lo, k = _reg(pos[0]), _reg(pos[1]), int(pos[2])

        def run(ctx):
            h, l_ = ctx.trf[hi], ctx.trf[lo]
            put(ctx, lo, ((h & ((1 << k) - 1)) << (32 - k)) | (l_ >> k))
            put(ctx, hi, h >> k)
        return run

    if name == "JOIN":
        need(4)
        d, hi, lo, k = _reg(pos[0]), _reg(pos[1]), _reg(pos[2]), int(pos[3])
        return lambda ctx: put(ctx, d, (ctx.trf[hi] << k) | (ctx.trf[lo] >> (32 - k)))

    if name == "PACK":
        need(3)
        d, sc, mg = _reg(pos[0]), _reg(pos[1]), _reg(pos[2])
        frac_pos = int(kw["k"])
        scale_bits = int(kw.get("sw", 8))
        if isinstance(fmt, formats.PositFormat):
            cfg = fmt.config

            def run(ctx):
                put(ctx, d, pack_posit(cfg, _signed(ctx.trf[sc], scale_bits), ctx.trf[mg], frac_pos))
        elif isinstance(fmt, formats.FloatFormat):
            desc = fmt.desc

            def run(ctx):
                put(ctx, d, pack_float(desc, _signed(ctx.trf[sc], scale_bits), ctx.trf[mg], frac_pos))
        else:
            raise ProgramError(f"line {op.line}: PACK needs a posit or float format")
        return run

    if name == "FINISH":
        need(5)
        d, mg = _reg(pos[0]), _reg(pos[1])
        sr, sb = _regbit(pos[2])
        ra, rb = _reg(pos[3]), _reg(pos[4])
        kind = kw.get("mode", "add")
        if isinstance(fmt, formats.PositFormat):
            finish, arg = _finish_posit, fmt.config
        elif isinstance(fmt, formats.FloatFormat):
            finish, arg = _finish_float, fmt.desc
        else:
            raise ProgramError(f"line {op.line}: FINISH needs a posit or float format")
        mask = (1 << fmt.width) - 1

        def run(ctx):
            t = ctx.trf
            out = finish(arg, t[mg], (t[sr] >> sb) & 1, t[ra] & mask, t[rb] & mask, kind)
            put(ctx, d, out)
            if ctx.tracing:
                ctx.state.record(op.cycle, "STRUCT", name, f"mag={t[mg]:#x}", f"r{d}={out:#x}")
        return run

    raise ProgramError(f"line {op.line}: unknown structural op {name}")


# ------------------------------------------------------------ loading

def parse_program(text: str, name: str = "<string>") -> MicroProgram:
    header: Dict[str, str] = {}
    ops: List[MicroOp] = []
    notes: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = _strip_comment(raw)
        line = line.strip()
        if not line:
            if comment.strip():
                notes.append(comment.strip())
            continue
        if line.startswith("."):
            key, _, value = line[1:].partition(" ")
            header[key] = value.strip()
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ProgramError(f"{name}:{lineno}: expected '<cycle> <cluster> <opcode> ...'")
        try:
            cycle = int(parts[0])
        except ValueError:
            raise ProgramError(f"{name}:{lineno}: bad cycle {parts[0]!r}") from None
        if cycle < 0:
            raise ProgramError(f"{name}:{lineno}: negative cycle")
        cluster = parts[1].upper()
        if cluster not in ("PC", "SC", "BOTH", "STRUCT"):
            raise ProgramError(f"{name}:{lineno}: unknown cluster {parts[1]!r}")
        ops.append(MicroOp(cycle, cluster, parts[2].upper(), tuple(parts[3:]), lineno))

    for key in ("format", "operation", "cycles"):
        if key not in header:
            raise ProgramError(f"{name}: missing .{key} header")
    fmt = formats.parse_format(header["format"])
    operation = header["operation"].upper()
    if operation not in OPERATIONS:
        raise ProgramError(f"{name}: unknown operation {operation}")
    prog = MicroProgram(header.get("name", name), fmt, operation, ops, int(header["cycles"]),
                        int(header.get("slack", 0)), notes)
    _compile(prog)
    check_program(prog)
    return prog


def _strip_comment(raw: str) -> Tuple[str, str, str]:
    """Split off a trailing comment without eating #imm operands."""
    m = re.search(r"(^|\s)#(?![-0-9])", raw)
    if not m:
        return raw, "", ""
    return raw[:m.start()], "#", raw[m.end():]


def _compile(prog: MicroProgram) -> None:
    for op in prog.ops:
        if op.cluster == "STRUCT":
            op.run = _compile_struct(op, prog.format)
        elif op.cluster == "BOTH":
            raise ProgramError(f"line {op.line}: BOTH issues are reserved for the decode sequence")
        else:
            op.run = _compile_cluster(op)


def check_program(prog: MicroProgram) -> None:
    """Static checks: issue limits, PC->SC pairing, and no idle gaps."""
    per_cycle = prog.by_cycle()
    for t, ops in enumerate(per_cycle):
        if not ops:
            raise ProgramError(f"{prog.name}: cycle {t} issues nothing")
        for cl in ("PC", "SC"):
            if sum(op.cluster == cl for op in ops) > 1:
                raise HazardError(f"{prog.name}: two {cl} issues in cycle {t}")
        for op in ops:
            if op.cluster != "SC" or op.opcode not in ("ADD_SUM", "XOR_STEP2"):
                continue
            step1 = "ADD_CARRY" if op.opcode == "ADD_SUM" else "XOR_STEP1"
            prev = per_cycle[t - 1] if t > 0 else []
            if not any(p.cluster == "PC" and p.opcode == step1 for p in prev):
                raise HazardError(f"{prog.name}: {op.opcode} at cycle {t} has no {step1} on PC at cycle {t - 1}")


def load_program_file(path) -> MicroProgram:
    with open(path) as fh:
        return parse_program(fh.read(), str(path))


def builtin_programs() -> Dict[Tuple[str, str], MicroProgram]:
    """All shipped programs keyed by (operation, format name)."""
    global _BUILTIN
    if _BUILTIN is None:
        progs = {}
        for entry in sorted(resources.files("talu.programs").iterdir(), key=lambda p: p.name):
            if entry.name.endswith(".tal"):
                prog = parse_program(entry.read_text(), entry.name)
                progs[(prog.operation, prog.format.name)] = prog
        _BUILTIN = progs
    return _BUILTIN


_BUILTIN: Optional[Dict[Tuple[str, str], MicroProgram]] = None


# ---------------------------------------------------------- execution

def run_microprogram(state: TaluState, program: MicroProgram, operands=None) -> Tuple[int, int]:
    """Execute a program on the current TRF.  Returns (r15, measured cycles).

    ``operands`` optionally maps register ids to values written before the
    first cycle.
    """
    if operands:
        for reg, value in operands.items():
            if not 0 <= reg < TRF_SIZE:
                raise TRFError(f"TRF register r{reg} out of range 0..{TRF_SIZE - 1}")
            state.trf[reg] = value & TRF_MASK
    ctx = _Ctx(state, program.format)
    trf = state.trf
    cycles = 0
    pipe = None
    for cluster_ops, struct_ops in program.schedule():
        ctx.pipe_prev = pipe
        ctx.pipe_next = None
        ctx.writes = []
        ctx.cf_next = None
        for run in cluster_ops:
            run(ctx)
        for reg, mask, value in ctx.writes:
            trf[reg] = (trf[reg] & ~mask) | (value & mask)
        if ctx.cf_next is not None:
            state.carry_flag = ctx.cf_next
        pipe = ctx.pipe_next
        for run in struct_ops:
            run(ctx)
        cycles += 1
    state.pc_pipeline = pipe
    state.sc_pipeline = None
    if cycles != program.declared_cycles:
        raise CycleMismatchError(f"{program.name}: ran {cycles} cycles, declared {program.declared_cycles}")
    state.advance(cycles)
    return state.trf[15], cycles

