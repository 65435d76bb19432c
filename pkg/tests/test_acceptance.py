"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

from __future__ import annotations

import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pytest

from talu import core, engine, formats, perf, qfunc, vector
from talu.microprog import builtin_programs
from talu.posit import NaR, PositConfig, PositWord, decode_reference, posit_to_rational, rational_to_posit, signed_bits

GOLDEN = Path(__file__).parent / "golden" / "perf_default.json"

PUBLISHED_CYCLES = {  # format: (mul, add)
    "p8e0": (17, 21), "p8e2": (19, 23), "p16e0": (25, 23), "p16e2": (29, 25),
    "fp8": (18, 8), "fp16": (87, 10), "int4": (13, 2), "int8": (28, 2), "int16": (105, 4),
}
RANDOM_PAIRS = 100_000


# ------------------------------------------------------------------ checks

def check_decode_fidelity():
    start = time.perf_counter()
    state = core.TaluState(posit_en=True)
    total = bad = 0
    for n, es in ((8, 0), (8, 2), (16, 0), (16, 2)):
        cfg = PositConfig(n, es)
        for bits in range(1 << n):
            word = PositWord(bits, cfg)
            fields, _ = core.decode_posit_on_talu(state, word)
            bad += fields != decode_reference(word)
            total += 1
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < 10, f"{total} patterns, {bad} mismatches, {elapsed:.2f} s (limit 10 s)"


def check_decode_cycles():
    state = core.TaluState(posit_en=True)
    seen = {}
    for n in (8, 16):
        for es in range(4):
            cfg = PositConfig(n, es)
            counts = {core.decode_posit_on_talu(state, PositWord(b, cfg))[1] for b in range(1 << n)}
            seen[(n, es)] = counts
    ok = all(c == {2} for (n, _), c in seen.items() if n == 8) and \
        all(c == {6} for (n, _), c in seen.items() if n == 16)
    return ok, "8-bit " + str(sorted(set.union(*(c for (n, _), c in seen.items() if n == 8)))) + \
        " cycles, 16-bit " + str(sorted(set.union(*(c for (n, _), c in seen.items() if n == 16)))) + \
        " cycles, es = 0..3"


def _exhaustive_job(name, op):
    fmt = formats.parse_format(name)
    state = core.TaluState()
    n = 1 << fmt.width
    bad = sum(engine.exec_op(state, op, fmt, a, b).bits != engine.reference_op(op, fmt, a, b)
              for a in range(n) for b in range(n))
    return name, op, n * n, bad


def _random_job(name, op, seed, count):
    fmt = formats.parse_format(name)
    state = core.TaluState()
    rng = random.Random(seed)
    bad = 0
    for _ in range(count):
        a, b = rng.getrandbits(fmt.width), rng.getrandbits(fmt.width)
        bad += engine.exec_op(state, op, fmt, a, b).bits != engine.reference_op(op, fmt, a, b)
    return name, op, count, bad


def _call(job):
    fn, *args = job
    return fn(*args)


def arithmetic_jobs(pairs=RANDOM_PAIRS, chunk=25_000):
    jobs = [(_exhaustive_job, name, op) for name in ("p8e0", "p8e2", "fp8", "int4", "int8") for op in ("ADD", "MUL")]
    for name in ("p16e0", "p16e2", "fp16", "int16"):
        for op in ("ADD", "MUL"):
            for i, start in enumerate(range(0, pairs, chunk)):
                jobs.append((_random_job, name, op, hash((name, op, i)) & 0xFFFF, min(chunk, pairs - start)))
    return jobs


def check_arithmetic_fidelity():
    totals = {}
    with ProcessPoolExecutor() as pool:
        for name, op, count, bad in pool.map(_call, arithmetic_jobs()):
            c, b = totals.get((name, op), (0, 0))
            totals[(name, op)] = (c + count, b + bad)
    bad = sum(b for _, b in totals.values())
    detail = ", ".join(f"{name} {op.lower()} {c}/{b}" for (name, op), (c, b) in sorted(totals.items()))
    return bad == 0, f"pairs/mismatches: {detail}"


def check_cycle_budgets():
    progs = builtin_programs()
    problems = []
    state = core.TaluState()
    for name, (mul, add) in PUBLISHED_CYCLES.items():
        for op, want in (("MUL", mul), ("ADD", add)):
            prog = progs[(op, name)]
            measured = engine.exec_op(state, op, name, 1, 1).cycles
            if not measured == prog.declared_cycles == want:
                problems.append(f"{name} {op}: measured {measured}, declared {prog.declared_cycles}, published {want}")
    checked = 2 * len(PUBLISHED_CYCLES)
    return not problems, "; ".join(problems) or f"{checked} programs: measured = declared = published"


def check_q_identities():
    qfunc.clear_cluster_cache()
    start = time.perf_counter()
    bad = 0
    for a in range(256):
        for b in range(256):
            bad += qfunc.cluster_op(qfunc.Opcode.AND, a, b) != a & b
            bad += qfunc.cluster_op(qfunc.Opcode.OR, a, b) != a | b
            bad += qfunc.cluster_op(qfunc.Opcode.NOT, a, b) != ~b & 0xFF
            bad += qfunc.xor_bits(a, b) != a ^ b
            bad += (qfunc.cluster_op(qfunc.Opcode.COMP, a, b) >> 7) != int(a >= b)
            for cin in (0, 1):
                c = qfunc.add_carries(a, b, cin)
                bad += (qfunc.add_sum(a, b, c) | (c >> 8) << 8) != a + b + cin
    elapsed = time.perf_counter() - start
    return bad == 0 and elapsed < 30, f"65536 pairs x 7 identities, {bad} mismatches, {elapsed:.2f} s (limit 30 s)"


def check_ratio_annotations():
    rows = {r["metric"]: r for r in perf.comparison_table()["ratios"]}
    parts, ok = [], True
    for metric, printed in (("area", 19.8), ("power", 54.6), ("power_density", 2.76), ("pdp", 3.47)):
        got = rows[metric]["computed"]
        dev = got / printed - 1
        ok &= abs(dev) < 0.01
        parts.append(f"{metric} {got:.3f} vs {printed} ({100 * dev:+.2f}%)")
    return ok, ", ".join(parts)


def check_equi_area_model():
    report = perf.equi_area_report(perf.load_config())
    text = perf.report_text(report)
    exact = perf.report_json(report) == GOLDEN.read_text()
    prints_targets = "0.93" in text and "1.98" in text and "dev %" in text
    ok = exact and report.energy_efficiency_ratio > 1 and prints_targets
    dev = report.deviation_pct
    return ok, (f"golden {'identical' if exact else 'DIFFERS'}; throughput {report.throughput_ratio:.4f} vs 0.93 "
                f"({dev['throughput_ratio']:+.2f}%), energy {report.energy_efficiency_ratio:.4f} vs 1.98 "
                f"({dev['energy_efficiency_ratio']:+.2f}%)")


def check_matmul_equivalence():
    start = time.perf_counter()
    cfg = vector.VectorUnitConfig()
    fmt = formats.parse_format("p8e2")
    rng = random.Random(2024)
    bad = 0
    for _ in range(1000):
        A = [[rng.getrandbits(8) for _ in range(3)] for _ in range(3)]
        B = [[rng.getrandbits(8) for _ in range(3)] for _ in range(3)]
        bad += vector.matmul_kernel(cfg, A, B, fmt).C != vector.matmul_reference(A, B, fmt)
    one = fmt.encode(1)
    eye = [[one if i == j else 0 for j in range(3)] for i in range(3)]
    zero = [[0] * 3 for _ in range(3)]
    special = 0
    for _ in range(50):
        B = [[rng.choice([b for b in range(256) if b != 0x80]) for _ in range(3)] for _ in range(3)]
        special += vector.matmul_kernel(cfg, eye, B, fmt).C != B
        special += vector.matmul_kernel(cfg, zero, B, fmt).C != zero
    elapsed = time.perf_counter() - start
    ok = bad == 0 and special == 0 and elapsed < 30
    return ok, f"1000 random kernels, {bad} mismatches; identity/zero {special} failures; {elapsed:.2f} s (limit 30 s)"


def check_posit_properties():
    failures = 0
    for es in range(4):
        cfg = PositConfig(8, es)
        try:
            words = sorted((PositWord(b, cfg) for b in range(256) if b != 0x80), key=signed_bits)
            vals = [posit_to_rational(w) for w in words]
            failures += sum(not a < b for a, b in zip(vals, vals[1:]))
            failures += sum(rational_to_posit(v, cfg) != w for v, w in zip(vals, words))
            failures += posit_to_rational(PositWord(0x80, cfg)) is not NaR
        except Exception:  # any exception counts against the criterion
            failures += 1
    return failures == 0, f"P(8,0..3): strict monotonicity and round trip over 255 values each, {failures} failures"


CRITERIA = [
    (1, "posit decode fidelity", check_decode_fidelity),
    (2, "decode cycle counts", check_decode_cycles),
    (3, "arithmetic fidelity", check_arithmetic_fidelity),
    (4, "cycle budgets", check_cycle_budgets),
    (5, "Q-mapping identities", check_q_identities),
    (6, "ratio recomputation", check_ratio_annotations),
    (7, "equi-area model", check_equi_area_model),
    (8, "matmul equivalence", check_matmul_equivalence),
    (9, "posit monotonicity and round trip", check_posit_properties),
]


def line(num, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}"


# ------------------------------------------------------------------ pytest

@pytest.fixture
def report(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(text):
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(text)
        else:
            print(text)
    return emit


@pytest.mark.parametrize("num, title, check", CRITERIA, ids=[c[1].replace(" ", "_") for c in CRITERIA])
def test_criterion(num, title, check, report):
    ok, detail = check()
    report(line(num, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, title, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(line(num, title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
