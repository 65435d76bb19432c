"""``talu`` command line: format conversion, op execution, kernels, reports.

Exit codes: 0 success, 1 usage error, 2 computation or invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import core, engine, formats, perf, posit, scalar, vector

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(text):
    try:
        return formats.parse_format(text)
    except formats.FormatError as exc:
        raise UsageError(str(exc)) from None


def _bits(fmt, text):
    try:
        v = int(text, 0)
    except ValueError:
        raise UsageError(f"cannot parse bit pattern {text!r}") from None
    if not 0 <= v < (1 << fmt.width):
        raise UsageError(f"{text} does not fit in {fmt.width} bits")
    return v


def _operand(fmt, text, raw):
    if raw:
        return _bits(fmt, text)
    try:
        return fmt.encode(formats.parse_value(fmt, text))
    except (formats.FormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _hex(fmt, v):
    return f"0x{v:0{(fmt.width + 3) // 4}x}"


def _exact(fmt, bits):
    v = fmt.value(bits)
    if isinstance(v, Fraction):
        return str(v)
    return fmt.describe(bits)


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# --------------------------------------------------------------- commands

def cmd_decode(args):
    fmt = _fmt(args.format)
    bits = _bits(fmt, args.bits)
    out = {"format": fmt.name, "bits": _hex(fmt, bits), "binary": format(bits, f"0{fmt.width}b")}
    if fmt.kind == "posit":
        if fmt.width not in (8, 16, 32):
            raise UsageError("TALU decode covers 8-, 16- and 32-bit posits")
        state = core.TaluState(posit_en=True)
        word = posit.PositWord(bits, fmt.config)
        if fmt.width == 32:
            fields, cycles = core.decode_posit_multipass(state, word)
        else:
            fields, cycles = core.decode_posit_on_talu(state, word)
        if fields != posit.decode_reference(word):
            print("decode mismatch against the reference decoder", file=sys.stderr)
            return EXIT_FAIL
        out["cycles"] = cycles
        if isinstance(fields, posit.PositFields):
            body = (-bits) & fmt.config.mask if fields.sign else bits
            regime = format(body, f"0{fmt.width}b")[1:1 + fields.regime_len + fields.has_stop_bit]
            out.update(kind="finite", S=fields.sign, K=fields.regime_value, R=regime, E=fields.exponent,
                       F=fields.fraction, fraction_bits=fields.fraction_len)
        else:
            out["kind"] = "zero" if fields is posit.Zero else "NaR"
    elif fmt.kind == "float":
        dec = scalar.float_decode(bits, fmt.desc)
        out["cycles"] = 0
        if isinstance(dec, scalar.FloatSpecial):
            out.update(kind=dec.kind, S=dec.sign)
        else:
            out.update(kind="finite", S=dec.sign, exponent=dec.exponent, significand=dec.significand)
    else:
        out.update(kind="int", cycles=0)
    out["value"] = _exact(fmt, bits)
    out["decimal"] = fmt.describe(bits)
    text = " ".join(f"{k}={v}" for k, v in out.items())
    _emit(args, out, text)
    return EXIT_OK


def cmd_encode(args):
    fmt = _fmt(args.format)
    try:
        value = formats.parse_value(fmt, args.value)
        bits = fmt.encode(value)
    except (formats.FormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    got = fmt.value(bits)
    out = {"format": fmt.name, "input": args.value, "bits": _hex(fmt, bits),
           "binary": format(bits, f"0{fmt.width}b"), "value": _exact(fmt, bits), "decimal": fmt.describe(bits)}
    if isinstance(got, Fraction) and value != 0:
        out["relative_error_pct"] = float(abs(got - value) / abs(value) * 100)
    _emit(args, out, " ".join(f"{k}={v}" for k, v in out.items()))
    return EXIT_OK


def cmd_exec(args):
    fmt = _fmt(args.format)
    op = args.op.upper()
    a = _operand(fmt, args.a, args.bits)
    b = _operand(fmt, args.b, args.bits) if args.b is not None else 0
    if op != "NOT" and args.b is None:
        raise UsageError(f"{op} needs two operands")
    state = core.TaluState(trace=[] if args.trace else None)
    try:
        res = engine.exec_op(state, op, fmt, a, b)
    except engine.UnsupportedOperation as exc:
        raise UsageError(str(exc)) from None
    ref = engine.reference_op(op, fmt, a, b)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            core.write_trace_csv(res.trace, fh)
    out = {"op": op, "format": fmt.name, "a": _hex(fmt, a), "b": _hex(fmt, b), "result": _hex(fmt, res.bits),
           "value": _exact(fmt, res.bits) if op not in ("COMP",) else str(res.bits),
           "decimal": fmt.describe(res.bits) if op != "COMP" else str(res.bits),
           "cycles": res.cycles, "decode_cycles": res.decode_cycles, "total_cycles": res.total_cycles,
           "program": res.program, "matches_reference": res.bits == ref}
    _emit(args, out, " ".join(f"{k}={v}" for k, v in out.items()))
    return EXIT_OK if res.bits == ref else EXIT_FAIL


def _vector_arg(fmt, text, raw):
    items = [t for t in text.split(",") if t.strip()] if text else []
    return [_operand(fmt, t.strip(), raw) for t in items]


def cmd_vexec(args):
    fmt = _fmt(args.format)
    try:
        cfg = vector.VectorUnitConfig(lanes=args.lanes, lane_width=args.lane_width, rf_width=args.rf_width)
        va, vb = _vector_arg(fmt, args.a, args.bits), _vector_arg(fmt, args.b, args.bits)
        res, cycles = vector.vector_exec(cfg, args.op.upper(), fmt, va, vb)
    except (vector.VectorError, engine.UnsupportedOperation) as exc:
        raise UsageError(str(exc)) from None
    out = {"op": args.op.upper(), "format": fmt.name, "lanes": cfg.lanes, "cycles": cycles,
           "hex": [_hex(fmt, v) for v in res], "decimal": [fmt.describe(v) for v in res]}
    text = f"cycles={cycles}\n" + "\n".join(f"{h} {d}" for h, d in zip(out["hex"], out["decimal"]))
    _emit(args, out, text)
    return EXIT_OK


def cmd_matmul(args):
    fmt = _fmt(args.format)
    try:
        cfg = vector.VectorUnitConfig(lanes=args.lanes, lane_width=args.lane_width, rf_width=args.rf_width)
        A = vector.load_matrix(args.A, fmt)
        B = vector.load_matrix(args.B, fmt)
        if len(A) != len(A[0]) or len(B) != len(B[0]):
            raise vector.VectorError("matrices must be square")
        res = vector.matmul_kernel(cfg, A, B, fmt)
    except (OSError, json.JSONDecodeError, vector.VectorError, formats.FormatError) as exc:
        raise UsageError(str(exc)) from None
    ref = vector.matmul_reference(A, B, fmt)
    freq = args.frequency
    dump = vector.dump_matrix(res.C, fmt)
    out = dict(dump, cycles=res.cycles, vector_issues=res.issues, lanes=cfg.lanes, frequency_hz=freq,
               kernels_per_s=freq / res.cycles, matches_reference=res.C == ref)
    rows = [" ".join(f"{h}({d})" for h, d in zip(hr, dr)) for hr, dr in zip(dump["hex"], dump["decimal"])]
    text = "\n".join(rows) + (f"\ncycles={res.cycles} issues={res.issues} lanes={cfg.lanes}"
                              f" kernels/s={freq / res.cycles:.4e} matches_reference={res.C == ref}")
    _emit(args, out, text)
    return EXIT_OK if res.C == ref else EXIT_FAIL


def cmd_compare(args):
    try:
        config = perf.load_config(args.config)
        report = perf.equi_area_report(config)
    except (OSError, perf.PerfConfigError) as exc:
        raise UsageError(str(exc)) from None
    if args.json:
        sys.stdout.write(perf.report_json(report))
    else:
        sys.stdout.write(perf.report_text(report))
        if args.sweep:
            print("\nassumption sweep:")
            for r in perf.assumption_sweep(config):
                a = r.config["assumptions"]
                print(f"  mac_mode={a['mac_mode']:10s} decode_amortized={str(a['decode_amortized']).lower():5s}"
                      f" throughput={r.throughput_ratio:.4f} energy={r.energy_efficiency_ratio:.4f}")
    return EXIT_OK


def cycle_table():
    from .microprog import builtin_programs

    rows = []
    published = perf.load_constants().raw["talu_cycles"]
    for (op, name), prog in sorted(builtin_programs().items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if op not in ("MUL", "ADD"):
            continue
        rows.append({"format": name, "op": op, "declared": prog.declared_cycles,
                     "published": published[name][op.lower()], "work_cycles": prog.declared_cycles - prog.slack,
                     "slack": prog.slack, "decode": published[name]["decode"]})
    return rows


def cmd_tables(args):
    rows = cycle_table()
    table = perf.comparison_table()
    if args.json:
        print(json.dumps({"cycles": rows, "comparison": table}, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"{'format':8s}{'op':5s}{'decode':>7s}{'declared':>9s}{'published':>10s}{'work':>6s}{'slack':>6s}")
    for r in rows:
        print(f"{r['format']:8s}{r['op']:5s}{r['decode']:7d}{r['declared']:9d}{r['published']:10d}"
              f"{r['work_cycles']:6d}{r['slack']:6d}")
    print()
    sys.stdout.write(perf.comparison_text(table))
    return EXIT_OK


def _corrupted(state):
    state.regime_lut[3] = 5
    return state


def _decode_check(name, corrupt_lut):
    fmt = formats.parse_format(name)
    state = core.TaluState(posit_en=True)
    if corrupt_lut:
        _corrupted(state)
    want = 2 if fmt.width == 8 else 6
    bad = 0
    for bits in range(1 << fmt.width):
        word = posit.PositWord(bits, fmt.config)
        try:
            fields, cycles = core.decode_posit_on_talu(state, word)
        except AssertionError:
            bad += 1
            continue
        bad += fields != posit.decode_reference(word) or cycles != want
    return {"check": f"decode {name}", "count": 1 << fmt.width, "unit": "patterns", "mismatches": bad}


def _arith_check(name, op, corrupt_lut):
    fmt = formats.parse_format(name)
    state = core.TaluState()
    if corrupt_lut:
        _corrupted(state)
    n = 1 << fmt.width
    bad = 0
    for a in range(n):
        for b in range(n):
            try:
                got = engine.exec_op(state, op, fmt, a, b).bits
            except AssertionError:
                bad += 1
                continue
            bad += got != engine.reference_op(op, fmt, a, b)
    return {"check": f"{op.lower()} {name}", "count": n * n, "unit": "pairs", "mismatches": bad}


def run_selftest(corrupt_lut=False, full=True, workers=None):
    """Exhaustive 8-bit oracle checks plus cycle-budget checks.

    Returns a list of result dicts, each with a ``passed`` key.
    """
    from concurrent.futures import ProcessPoolExecutor

    jobs = [(_decode_check, name, corrupt_lut) for name in ("p8e0", "p8e2", "p16e0", "p16e2")]
    if full:
        jobs += [(_arith_check, name, op, corrupt_lut)
                 for name in ("p8e0", "p8e2", "fp8", "int8", "int4") for op in ("ADD", "MUL")]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_call, jobs))
    for row in cycle_table():
        results.append({"check": f"cycles {row['format']} {row['op']}", "count": 1,
                        "mismatches": int(row["declared"] != row["published"]),
                        "declared": row["declared"], "published": row["published"]})
    for r in results:
        r["passed"] = r["mismatches"] == 0
    return results


def _call(job):
    fn, *args = job
    return fn(*args)


def cmd_selftest(args):
    results = run_selftest(corrupt_lut=args.corrupt_lut, full=not args.quick, workers=args.workers)
    fails = sum(not r["passed"] for r in results)
    if args.json:
        print(json.dumps({"passed": not fails, "checks": results}, indent=2, sort_keys=True))
    else:
        for r in results:
            extra = f" declared {r['declared']} published {r['published']}" if "declared" in r else \
                f": {r['count']} {r['unit']} checked, {r['mismatches']} mismatches"
            print(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']}{extra}")
        print("PASS" if not fails else f"FAIL ({fails} failing checks)")
    return EXIT_OK if not fails else EXIT_FAIL


# ----------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="talu", description="TALU transprecision ALU simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="emit JSON")

    sp = sub.add_parser("decode", help="decode a bit pattern")
    sp.add_argument("--format", required=True)
    sp.add_argument("--bits", required=True, help="pattern, e.g. 0x74")
    common(sp)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("encode", help="round a decimal to a format")
    sp.add_argument("--format", required=True)
    sp.add_argument("value")
    common(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("exec", help="run one scalar op on the TALU")
    sp.add_argument("op")
    sp.add_argument("--format", required=True)
    sp.add_argument("a")
    sp.add_argument("b", nargs="?")
    sp.add_argument("--bits", action="store_true", help="operands are raw bit patterns")
    sp.add_argument("--trace", help="write a per-cycle CSV trace here")
    common(sp)
    sp.set_defaults(func=cmd_exec)

    def vec_opts(sp):
        sp.add_argument("--lanes", type=int, default=128)
        sp.add_argument("--lane-width", type=int, default=8)
        sp.add_argument("--rf-width", type=int, default=1024)

    sp = sub.add_parser("vexec", help="run a vector op on TALU-V")
    sp.add_argument("op")
    sp.add_argument("--format", required=True)
    sp.add_argument("--a", required=True, help="comma-separated values")
    sp.add_argument("--b", required=True, help="comma-separated values")
    sp.add_argument("--bits", action="store_true")
    vec_opts(sp)
    common(sp)
    sp.set_defaults(func=cmd_vexec)

    sp = sub.add_parser("matmul", help="matrix multiply on TALU-V")
    sp.add_argument("A")
    sp.add_argument("B")
    sp.add_argument("--format", default="p8e2")
    sp.add_argument("--frequency", type=float, default=2e9, help="clock in Hz for kernels/s")
    vec_opts(sp)
    common(sp)
    sp.set_defaults(func=cmd_matmul)

    sp = sub.add_parser("compare", help="equi-area TALU-V vs UMAC-V report")
    sp.add_argument("--config", help="PerfConfig JSON (default: shipped config)")
    sp.add_argument("--sweep", action="store_true", help="also list every assumption combination")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("tables", help="cycle budgets and unit comparison tables")
    common(sp)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("selftest", help="exhaustive 8-bit checks and cycle checks")
    sp.add_argument("--quick", action="store_true", help="skip the exhaustive arithmetic sweep")
    sp.add_argument("--corrupt-lut", action="store_true", help="fault injection: break one regime LUT entry")
    sp.add_argument("--workers", type=int, help="worker processes (default: one per CPU)")
    common(sp)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"talu: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (core.TaluError, AssertionError) as exc:
        print(f"talu: failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
