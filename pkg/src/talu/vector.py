"""TALU-V: an N-lane SIMD array of TALUs and the matrix-multiply kernel."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from . import core, engine, formats


class VectorError(ValueError):
    pass


@dataclass(frozen=True)
class VectorUnitConfig:
    lanes: int = 128
    lane_width: int = 8
    rf_width: int = 1024

    def __post_init__(self):
        if self.lanes <= 0:
            raise VectorError("a vector unit needs at least one lane")
        if self.lanes * self.lane_width > self.rf_width:
            raise VectorError(f"{self.lanes} lanes x {self.lane_width} bits exceed the {self.rf_width}-bit RF port")


@dataclass(frozen=True)
class KernelSpec:
    rows: int = 3
    cols: int = 3
    inner: int = 3
    format: str = "p8e2"
    kind: str = "MATMUL"

    def __post_init__(self):
        if min(self.rows, self.cols, self.inner) <= 0:
            raise VectorError("kernel dimensions must be positive")
        if self.kind != "MATMUL":
            raise VectorError(f"unknown kernel {self.kind}")


@dataclass(frozen=True)
class VectorOp:
    """One vector issue: ``operation`` on the listed lane jobs.

    For MUL a job is (i, j, k), the product A[i][k] * B[k][j].  For ADD a
    job is (i, j, k), folding product k into the running sum of C[i][j].
    """

    stage: int
    operation: str
    jobs: Tuple[Tuple[int, int, int], ...]


class _Lanes:
    """Lane states; every lane is its own TALU."""

    def __init__(self, config: VectorUnitConfig):
        self.config = config
        self.states = [core.TaluState() for _ in range(config.lanes)]


def vector_exec(config: VectorUnitConfig, operation: str, fmt, vec_a: Sequence[int], vec_b: Sequence[int],
                lanes: _Lanes = None):
    """Lane i computes exec_op(a_i, b_i).  Returns (results, cycles)."""
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    if len(vec_a) != len(vec_b):
        raise VectorError("operand vectors differ in length")
    if len(vec_a) > config.lanes:
        raise VectorError(f"{len(vec_a)} elements exceed {config.lanes} lanes")
    if not vec_a:
        return [], 0
    lanes = lanes or _Lanes(config)
    out, cycles = [], set()
    for i, (a, b) in enumerate(zip(vec_a, vec_b)):
        r = engine.exec_op(lanes.states[i], operation, fmt, a, b)
        out.append(r.bits)
        cycles.add(r.total_cycles)
    if len(cycles) != 1:
        raise AssertionError(f"lanes disagree on cycle count: {sorted(cycles)}")
    return out, cycles.pop()


def schedule_matmul(config: VectorUnitConfig, spec: KernelSpec) -> List[VectorOp]:
    """All products in one multiply stage, then one add stage per k = 1..inner-1.

    Each stage is cut into ceil(jobs / lanes) vector issues.  Accumulation
    runs k ascending: C[i][j] = ((p0 + p1) + p2) + ...
    """
    ops: List[VectorOp] = []
    muls = [(i, j, k) for i in range(spec.rows) for j in range(spec.cols) for k in range(spec.inner)]
    stages = [("MUL", muls)]
    for k in range(1, spec.inner):
        stages.append(("ADD", [(i, j, k) for i in range(spec.rows) for j in range(spec.cols)]))
    for stage, (operation, jobs) in enumerate(stages):
        for start in range(0, len(jobs), config.lanes):
            ops.append(VectorOp(stage, operation, tuple(jobs[start:start + config.lanes])))
    return ops


def matmul_reference(A, B, fmt) -> List[List[int]]:
    """Same op order, straight through the scalar oracles."""
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    rows, inner, cols = len(A), len(B), len(B[0])
    C = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = engine.reference_op("MUL", fmt, A[i][0], B[0][j])
            for k in range(1, inner):
                acc = engine.reference_op("ADD", fmt, acc, engine.reference_op("MUL", fmt, A[i][k], B[k][j]))
            row.append(acc)
        C.append(row)
    return C


@dataclass
class MatmulResult:
    C: List[List[int]]
    cycles: int
    issues: int
    schedule: List[VectorOp]


def matmul_kernel(config: VectorUnitConfig, A, B, fmt="p8e2") -> MatmulResult:
    """C = A x B on TALU-V.  A and B hold raw bit patterns of ``fmt``.

    Cycles = sum over vector issues of the per-op latency (decode included).
    """
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    rows, inner = len(A), len(A[0]) if A else 0
    if not A or not B or len(B) != inner or any(len(r) != inner for r in A) \
            or any(len(r) != len(B[0]) for r in B):
        raise VectorError("matrix dimensions do not agree")
    try:
        engine.find_program("MUL", fmt)
        engine.find_program("ADD", fmt)
    except engine.UnsupportedOperation as exc:
        raise VectorError(str(exc)) from None
    cols = len(B[0])
    spec = KernelSpec(rows, cols, inner, fmt.name)
    sched = schedule_matmul(config, spec)
    lanes = _Lanes(config)
    prod = {}
    acc = {}
    cycles = 0
    for op in sched:
        if op.operation == "MUL":
            va = [A[i][k] for i, j, k in op.jobs]
            vb = [B[k][j] for i, j, k in op.jobs]
            res, c = vector_exec(config, "MUL", fmt, va, vb, lanes)
            for job, r in zip(op.jobs, res):
                prod[job] = r
                if job[2] == 0:
                    acc[job[:2]] = r
        else:
            va = [acc[(i, j)] for i, j, k in op.jobs]
            vb = [prod[(i, j, k)] for i, j, k in op.jobs]
            res, c = vector_exec(config, "ADD", fmt, va, vb, lanes)
            for (i, j, _), r in zip(op.jobs, res):
                acc[(i, j)] = r
        cycles += c
    C = [[acc[(i, j)] for j in range(cols)] for i in range(rows)]
    return MatmulResult(C, cycles, len(sched), sched)


def kernel_cycles(config: VectorUnitConfig, spec: KernelSpec) -> int:
    """Cycle count of matmul_kernel without running it."""
    fmt = formats.parse_format(spec.format)
    decode = 0
    if fmt.kind == "posit":
        decode = 2 if fmt.width == 8 else 12
    lat = {op: engine.find_program(op, fmt).declared_cycles + decode for op in ("MUL", "ADD")}
    return sum(lat[op.operation] for op in schedule_matmul(config, spec))


# ------------------------------------------------------------------ I/O

def load_matrix(path, fmt) -> List[List[int]]:
    """JSON list of rows of decimal numbers (or strings such as "1/3"), encoded to fmt."""
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("matrix", data.get("values"))
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise VectorError(f"{path}: expected a JSON list of rows")
    return [[fmt.encode(formats.parse_value(fmt, str(v))) for v in row] for row in data]


def dump_matrix(C, fmt) -> dict:
    if isinstance(fmt, str):
        fmt = formats.parse_format(fmt)
    digits = math.ceil(fmt.width / 4)
    return {
        "format": fmt.name,
        "hex": [[f"0x{v:0{digits}x}" for v in row] for row in C],
        "decimal": [[fmt.describe(v) for v in row] for row in C],
    }
