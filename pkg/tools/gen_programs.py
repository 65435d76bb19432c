"""Emit the shipped TALU micro-programs into src/talu/programs/.

A small in-order scheduler places each op at the earliest cycle its inputs
allow, honouring one PC and one SC issue per cycle and the PC->SC pairing of
two-step ops.  For every (format, op) with a published cycle budget, the
variants are tried in a fixed preference order (explicit AND partial
products before Input Generator gating before radix-4, carry-flag ripple
before pipeline-register chaining) and the first one that fits is kept.
Left-over budget is filled with TRF operand-read cycles at the start of
the program and recorded in the ``.slack`` header.

Usage: python3 tools/gen_programs.py [--check]
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from collections import defaultdict
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from talu import formats  # noqa: E402
from talu.microprog import parse_program  # noqa: E402

OUT = ROOT / "src" / "talu" / "programs"

# (mul, add) cycle budgets per format
BUDGETS = {
    "p8e0": (17, 21), "p8e2": (19, 23), "p16e0": (25, 23), "p16e2": (29, 25),
    "fp8": (18, 8), "fp16": (87, 10),
    "int4": (13, 2), "int8": (28, 2), "int16": (105, 4),
}

VARIANTS = [(mul, chain) for mul in ("and", "gated", "radix4") for chain in ("cf", "pipe")]


class Unschedulable(Exception):
    pass


def _resources(text: str):
    """TRF resources an operand or destination touches (slice granular for plain rN.s)."""
    m = re.fullmatch(r"~?r(\d+)\.(\d+)", text)
    if m:
        return [f"r{m.group(1)}.{m.group(2)}"]
    out = []
    for reg in re.findall(r"r(\d+)", text):
        out += [f"r{reg}.{s}" for s in range(4)]
    return out


def _whole(*regs):
    return [f"r{r}.{s}" for r in regs for s in range(4)]


class Sched:
    def __init__(self):
        self.lines = []  # (cycle, seq, cluster, text)
        self.rc = defaultdict(int)  # first cycle a cluster op may read
        self.rs = defaultdict(int)  # first cycle a structural op may read
        self.lr = defaultdict(lambda: -1)  # last cluster read
        self.lsr = defaultdict(lambda: -1)  # last structural read
        self.lsw = defaultdict(lambda: -1)  # last structural write
        self.used = {"PC": set(), "SC": set()}
        self.cur = 0
        self.last_pc = None
        self.seq = 0

    def _emit(self, cycle, cluster, text):
        self.lines.append((cycle, self.seq, cluster, text))
        self.seq += 1

    def _war(self, writes, t):
        return max([t] + [self.lr[w] for w in writes] + [self.lsr[w] + 1 for w in writes]
                   + [self.lsw[w] + 1 for w in writes])

    def _reads_ok(self, reads, t):
        return all(self.rc[r] <= t for r in reads)

    def pc(self, text, reads, writes=(), chained=False):
        t = self._war(writes, max([self.cur] + [self.rc[r] for r in reads]))
        if chained:
            if self.last_pc is None or t > self.last_pc + 1:
                raise Unschedulable("pipe-chained issue cannot follow its producer")
            t = self.last_pc + 1
        while t in self.used["PC"]:
            if chained:
                raise Unschedulable("PC busy for a pipe-chained issue")
            t += 1
        self.used["PC"].add(t)
        self._emit(t, "PC", text)
        for r in reads:
            self.lr[r] = max(self.lr[r], t)
        for w in writes:
            self.rc[w], self.rs[w] = t + 1, t
        self.last_pc = t
        self.cur = t
        return t

    def pair(self, pc_text, sc_text, pc_reads, sc_reads, sc_writes, chained=False):
        t = max([self.cur] + [self.rc[r] for r in pc_reads] + [self.rc[r] - 1 for r in sc_reads])
        t = max(t, self._war(sc_writes, t + 1) - 1)
        if chained:
            if self.last_pc is None or t > self.last_pc + 1:
                raise Unschedulable("pipe-chained issue cannot follow its producer")
            t = self.last_pc + 1
        while t in self.used["PC"] or (t + 1) in self.used["SC"]:
            if chained:
                raise Unschedulable("cluster busy for a pipe-chained issue")
            t += 1
        self.used["PC"].add(t)
        self.used["SC"].add(t + 1)
        self._emit(t, "PC", pc_text)
        self._emit(t + 1, "SC", sc_text)
        for r in pc_reads:
            self.lr[r] = max(self.lr[r], t)
        for r in sc_reads:
            self.lr[r] = max(self.lr[r], t + 1)
        for w in list(sc_writes) + ["cf"]:
            self.rc[w], self.rs[w] = t + 2, t + 1
        self.last_pc = t
        self.cur = t
        return t

    def struct(self, text, reads=(), writes=(), at=None):
        c = max([self.cur] + [self.rs[r] for r in reads] + [self.lr[w] for w in writes])
        if at is not None:
            if c > at:
                raise Unschedulable(f"{text} cannot ride on cycle {at}")
            c = at
        self._emit(c, "STRUCT", text)
        for r in reads:
            self.lsr[r] = max(self.lsr[r], c)
        for w in writes:
            self.rc[w], self.rs[w], self.lsw[w] = c + 1, c, c
        self.cur = max(self.cur, c)
        return c

    @property
    def length(self):
        return max(c for c, *_ in self.lines) + 1

    def render(self, budget=None):
        length = self.length
        slack = 0 if budget is None else budget - length
        if slack < 0:
            raise Unschedulable(f"needs {length} cycles, budget {budget}")
        busy = {c for c, *_ in self.lines}
        out = [f"{c} STRUCT TRF_READ r0 r1  # slack: operand fetch hold" for c in range(slack)]
        fill = [c for c in range(length) if c not in busy]
        rows = sorted(self.lines + [(c, -1, "STRUCT", "TRF_READ  # stall") for c in fill])
        for c, _, cluster, text in rows:
            out.append(f"{c + slack} {cluster} {text}")
        return out, length, slack


# ------------------------------------------------------------ helpers

def add_slices(s, dst, a, b, nslices, width, chain, cin0="#0", sum_dst=None):
    """Multi-slice add dst = a + b (operands are register-expression stems)."""
    sum_dst = sum_dst or dst
    for k in range(nslices):
        cin = cin0 if k == 0 else ("pipe" if chain == "pipe" else "cf")
        w = f" w={width}" if width != 8 else ""
        opa, opb = a(k), b(k)
        reads = _resources(opa) + _resources(opb) + (["cf"] if cin == "cf" else []) \
            + (_resources(cin.split("@")[0]) if "@" in cin else [])
        s.pair(f"ADD_CARRY {opa} {opb} cin={cin}{w}", f"ADD_SUM {sum_dst}.{k} {opa} {opb}{w}",
               reads, _resources(opa) + _resources(opb), [f"{sum_dst}.{k}"],
               chained=(k > 0 and chain == "pipe"))


def _sl(reg, k):
    return f"{reg}.{k}"


def scale_terms(s, fmt):
    """Posit scale = (K << es) | E for both operands, sign-extended."""
    es = fmt.config.es
    for kr, er in ((3, 4), (7, 8)):
        s.pc(f"OR r{kr}.0 shl(r{kr},{es}).0 r{er}.0", _whole(kr) + _whole(er), [f"r{kr}.0"])
        s.struct(f"SEXT r{kr} r{kr} 8", _whole(kr), _whole(kr))


def sign_xor(s, dst):
    s.pair("XOR_STEP1 r2.0 r6.0 w=1", f"XOR_STEP2 {dst}.0 r2.0 r6.0 w=1",
           ["r2.0", "r6.0"], ["r2.0", "r6.0"], [f"{dst}.0"])


def frac_bits(fmt):
    return fmt.config.max_frac_bits if fmt.kind == "posit" else fmt.desc.frac_bits


# ---------------------------------------------------------------- MUL

def gen_mul_real(fmt, mul, chain):
    s = Sched()
    fm = frac_bits(fmt)
    w = fm + 1
    s.struct("MOV r10 #0", [], _whole(10), at=0)
    s.struct("MOV r11 #0", [], _whole(11), at=0)
    sign = "r13" if mul == "radix4" else "r12"
    sign_xor(s, sign)
    if fmt.kind == "posit" and fmt.config.es:
        scale_terms(s, fmt)
    if mul == "radix4":
        nsl = math.ceil((w + 2) / 8)
        add_slices(s, "r12", lambda k: f"r5.{k}", lambda k: f"shl(r5,1).{k}", nsl, 8, chain, sum_dst="r12")
    add_slices(s, "r3", lambda k: "r3.0", lambda k: "r7.0", 1, 8, chain)
    s.struct("SEXT r3 r3 8", _whole(3), _whole(3))

    j = 0
    while j < w:
        if mul == "radix4" and j + 1 < w:
            nsl = math.ceil((w + 2) / 8)
            term = lambda k, j=j: f"mul4(r5,r12,r9,{j}).{k}"  # noqa: E731
            add_slices(s, "r10", lambda k: f"r10.{k}", term, nsl, 8, chain)
            s.struct("SHRP r10 r11 2", _whole(10, 11), _whole(10, 11))
            j += 2
            continue
        nsl = math.ceil((w + 1) / 8)
        if mul == "and":
            for k in range(nsl):
                s.pc(f"AND r13.{k} r5.{k} bit(r9,{j})", [f"r5.{k}"] + _whole(9), [f"r13.{k}"])
            term = lambda k: f"r13.{k}"  # noqa: E731
        else:
            term = lambda k, j=j: f"gate(r5,r9,{j}).{k}"  # noqa: E731
        add_slices(s, "r10", lambda k: f"r10.{k}", term, nsl, 8, chain)
        s.struct("SHRP r10 r11 1", _whole(10, 11), _whole(10, 11))
        j += 1
    s.struct(f"JOIN r10 r10 r11 {w}", _whole(10, 11), _whole(10))
    s.struct(f"PACK r14 r3 r10 k={2 * fm}", _whole(3, 10), _whole(14))
    s.struct(f"FINISH r15 r14 {sign}@0 r0 r1 mode=mul", _whole(14, int(sign[1:]), 0, 1), _whole(15))
    return s


def gen_mul_int(fmt, mul, chain):
    """Shift-and-add modulo 2^w: partial product j is (A << j) AND B_j."""
    if mul == "radix4":
        raise Unschedulable("integer multiply uses radix-2 only")
    s = Sched()
    wd = fmt.width
    p = min(wd, 8)
    nsl = math.ceil(wd / 8)
    s.struct("MOV r10 #0", [], _whole(10), at=0)
    for j in range(wd):
        first = math.floor(j / 8) if p == 8 else 0
        rng = range(first, nsl)
        if mul == "and":
            for k in rng:
                ww = f" w={p}" if p != 8 else ""
                s.pc(f"AND r13.{k} shl(r0,{j}).{k} bit(r1,{j}){ww}", _whole(0, 1), [f"r13.{k}"])
            term = lambda k: f"r13.{k}"  # noqa: E731
        else:
            term = lambda k, j=j: f"gate(r0,r1,{j}).{k}" if j == 0 else f"gate(r{12},r1,{j}).{k}"  # noqa: E731
            if j > 0:
                s.struct(f"SHL r12 r0 {j}", _whole(0), _whole(12))
        # slices below j/8 receive no partial-product bits and keep their value
        for k in rng:
            cin = "#0" if k == first else ("pipe" if chain == "pipe" else "cf")
            ww = f" w={p}" if p != 8 else ""
            opa, opb = f"r10.{k}", term(k)
            reads = _resources(opa) + _resources(opb) + (["cf"] if cin == "cf" else [])
            s.pair(f"ADD_CARRY {opa} {opb} cin={cin}{ww}", f"ADD_SUM r10.{k} {opa} {opb}{ww}",
                   reads, _resources(opa) + _resources(opb), [f"r10.{k}"],
                   chained=(k > first and chain == "pipe"))
    s.struct("MOV r15 r10", _whole(10), _whole(15))
    return s


# ---------------------------------------------------------------- ADD

def gen_add_real(fmt, mul, chain):
    del mul
    s = Sched()
    fm = frac_bits(fmt)
    w = fm + 1
    sign_xor(s, "r13")
    if fmt.kind == "posit" and fmt.config.es:
        scale_terms(s, fmt)
    # |A| >= |B| from the carry out of abs(A) - abs(B)
    abs_slices = math.ceil((fmt.width - 1) / 8)
    for k in range(abs_slices):
        cin = "#1" if k == 0 else "pipe"
        s.pc(f"ADD_CARRY r2.{k + 1} ~r6.{k + 1} cin={cin}", [f"r2.{k + 1}", f"r6.{k + 1}"], chained=k > 0)
    s.struct("SETF r12 pipe@8", [], _whole(12), at=s.last_pc)
    for a, b in ((2, 6), (3, 7), (5, 9)):
        s.struct(f"CSWAP r{a} r{b} if=~r12@0", _whole(12, a, b), _whole(a, b))
    add_slices(s, "r12", lambda k: "r3.0", lambda k: "~r7.0", 1, 8, chain, cin0="#1")
    s.struct("SHL r5 r5 3", _whole(5), _whole(5))
    s.struct("SHL r9 r9 3", _whole(9), _whole(9))
    s.struct("ALIGN r9 r9 r12", _whole(9, 12), _whole(9))
    nsl = math.ceil((w + 4) / 8)
    add_slices(s, "r5", lambda k: f"r5.{k}", lambda k: f"r9.{k}^r13@0", nsl, 8, chain, cin0="r13@0")
    s.struct(f"PACK r14 r3 r5 k={fm + 3}", _whole(3, 5), _whole(14))
    s.struct("FINISH r15 r14 r2@0 r0 r1 mode=add", _whole(14, 2, 0, 1), _whole(15))
    return s


def gen_add_int(fmt, mul, chain):
    del mul
    s = Sched()
    wd = fmt.width
    p = min(wd, 8)
    ww = f" w={p}" if p != 8 else ""
    for k in range(math.ceil(wd / 8)):
        cin = "#0" if k == 0 else ("pipe" if chain == "pipe" else "cf")
        reads = [f"r0.{k}", f"r1.{k}"] + (["cf"] if cin == "cf" else [])
        s.pair(f"ADD_CARRY r0.{k} r1.{k} cin={cin}{ww}", f"ADD_SUM r15.{k} r0.{k} r1.{k}{ww}",
               reads, [f"r0.{k}", f"r1.{k}"], [f"r15.{k}"], chained=(k > 0 and chain == "pipe"))
    return s


# ------------------------------------------------------- bitwise / COMP

def gen_bitwise(fmt, op):
    s = Sched()
    wd = fmt.width
    p = min(wd, 8)
    ww = f" w={p}" if p != 8 else ""
    for k in range(math.ceil(wd / 8)):
        if op == "NOT":
            s.pc(f"NOT r15.{k} r0.{k}{ww}", [f"r0.{k}"], [f"r15.{k}"])
        elif op == "XOR":
            s.pair(f"XOR_STEP1 r0.{k} r1.{k}{ww}", f"XOR_STEP2 r15.{k} r0.{k} r1.{k}{ww}",
                   [f"r0.{k}", f"r1.{k}"], [f"r0.{k}", f"r1.{k}"], [f"r15.{k}"])
        else:
            s.pc(f"{op} r15.{k} r0.{k} r1.{k}{ww}", [f"r0.{k}", f"r1.{k}"], [f"r15.{k}"])
    return s


def gen_comp(fmt):
    """Unsigned A >= B: COMP slot p-1 for one slice, carry of A - B across slices."""
    s = Sched()
    wd = fmt.width
    if wd <= 8:
        ww = f" w={wd}" if wd != 8 else ""
        s.pc(f"COMP r12.0 r0.0 r1.0{ww}", ["r0.0", "r1.0"], ["r12.0"])
        s.struct(f"BIT r15 r12 {wd - 1}", _whole(12), _whole(15))
        return s
    for k in range(wd // 8):
        cin = "#1" if k == 0 else "pipe"
        s.pc(f"ADD_CARRY r0.{k} ~r1.{k} cin={cin}", [f"r0.{k}", f"r1.{k}"], chained=k > 0)
    s.struct("SETF r15 pipe@8", [], _whole(15), at=s.last_pc)
    return s


# ------------------------------------------------------------- driver

HEADER = """\
# {title}
# Registers: r0/r1 raw operands, r2..r5 and r6..r9 operand fields
# (flags|abs<<8, scale, E, significand), r10..r14 scratch, r15 result.
.name {name}
.format {fmt}
.operation {op}
.cycles {cycles}
.slack {slack}
.variant {variant}
"""


def build(fmt_name, op):
    fmt = formats.parse_format(fmt_name)
    budget = None
    if fmt_name in BUDGETS and op in ("MUL", "ADD"):
        budget = BUDGETS[fmt_name][0 if op == "MUL" else 1]
    if op in ("MUL", "ADD"):
        gen = {("MUL", True): gen_mul_int, ("MUL", False): gen_mul_real,
               ("ADD", True): gen_add_int, ("ADD", False): gen_add_real}[(op, fmt.kind == "int")]
        tried = []
        for mul, chain in VARIANTS:
            if op == "ADD" and mul != "and":
                continue
            try:
                sched = gen(fmt, mul, chain)
                lines, length, slack = sched.render(budget)
            except Unschedulable as exc:
                tried.append(f"{mul}/{chain}: {exc}")
                continue
            return fmt, lines, length, slack, f"{mul}/{chain}" if op == "MUL" else chain, budget
        raise SystemExit(f"{fmt_name} {op}: no variant fits\n  " + "\n  ".join(tried))
    sched = gen_comp(fmt) if op == "COMP" else gen_bitwise(fmt, op)
    lines, length, slack = sched.render(None)
    return fmt, lines, length, slack, "-", None


PROGRAMS = [(f, op) for f in BUDGETS for op in ("MUL", "ADD")] + [
    (f, op) for f in ("int4", "int8", "int16") for op in ("AND", "OR", "NOT", "XOR", "COMP")
]


def render(fmt_name, op):
    fmt, lines, length, slack, variant, budget = build(fmt_name, op)
    cycles = budget if budget is not None else length
    title = f"{op} on {fmt_name}: {length} scheduled cycles"
    if slack:
        title += f" + {slack} slack"
    name = f"{fmt_name}_{op.lower()}"
    text = HEADER.format(title=title, name=name, fmt=fmt.name, op=op, cycles=cycles,
                         slack=slack, variant=variant) + "\n".join(lines) + "\n"
    parse_program(text, name)  # must load cleanly
    return name, text, length, slack, variant


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="fail if a shipped file differs")
    args = ap.parse_args(argv)
    OUT.mkdir(parents=True, exist_ok=True)
    stale = []
    for fmt_name, op in PROGRAMS:
        name, text, length, slack, variant = render(fmt_name, op)
        path = OUT / f"{name}.tal"
        if args.check:
            if not path.exists() or path.read_text() != text:
                stale.append(path.name)
        else:
            path.write_text(text)
        print(f"{name:14s} scheduled={length:3d} slack={slack:3d} variant={variant}")
    if stale:
        raise SystemExit(f"stale programs: {', '.join(stale)}")


if __name__ == "__main__":
    main()
