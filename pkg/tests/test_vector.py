import itertools
import json
import random

import pytest

from talu import core, engine, formats
from talu.vector import (
    KernelSpec, VectorError, VectorUnitConfig, dump_matrix, kernel_cycles, load_matrix, matmul_kernel,
    matmul_reference, schedule_matmul, vector_exec,
)

P8E2 = formats.parse_format("p8e2")
CFG = VectorUnitConfig()


def test_config_checks():
    with pytest.raises(VectorError):
        VectorUnitConfig(lanes=0)
    with pytest.raises(VectorError):
        VectorUnitConfig(lanes=256, lane_width=8, rf_width=1024)
    with pytest.raises(VectorError):
        KernelSpec(0, 3, 3)


def test_full_width_add_matches_scalar():
    rng = random.Random(1)
    a = [rng.getrandbits(8) for _ in range(128)]
    b = [rng.getrandbits(8) for _ in range(128)]
    out, cycles = vector_exec(CFG, "ADD", P8E2, a, b)
    assert out == [engine.reference_op("ADD", P8E2, x, y) for x, y in zip(a, b)]
    assert cycles == 2 + 23


def test_degenerate_vectors():
    assert vector_exec(CFG, "ADD", P8E2, [], []) == ([], 0)
    out, cycles = vector_exec(VectorUnitConfig(lanes=1), "MUL", P8E2, [0x44], [0x49])
    r = engine.exec_op(core.TaluState(), "MUL", P8E2, 0x44, 0x49)
    assert (out, cycles) == ([r.bits], r.total_cycles)
    with pytest.raises(VectorError):
        vector_exec(VectorUnitConfig(lanes=2), "ADD", P8E2, [1, 2, 3], [1, 2, 3])
    with pytest.raises(VectorError):
        vector_exec(CFG, "ADD", P8E2, [1], [1, 2])


def test_schedule_counts():
    sched = schedule_matmul(CFG, KernelSpec())
    assert [op.operation for op in sched] == ["MUL", "ADD", "ADD"]
    assert len(sched[0].jobs) == 27
    narrow = schedule_matmul(VectorUnitConfig(lanes=8), KernelSpec())
    assert sum(op.operation == "MUL" for op in narrow) == 4
    assert sum(op.operation == "ADD" for op in narrow) == 4
    single = schedule_matmul(CFG, KernelSpec(1, 1, 1))
    assert [(op.operation, len(op.jobs)) for op in single] == [("MUL", 1)]


def _rand_matrix(rng, n=3):
    return [[rng.getrandbits(8) for _ in range(n)] for _ in range(n)]


def test_identity_and_zero():
    rng = random.Random(5)
    one = P8E2.encode(1)
    eye = [[one if i == j else 0 for j in range(3)] for i in range(3)]
    zero = [[0] * 3 for _ in range(3)]
    for _ in range(20):
        B = [[b if b != 0x80 else 0x40 for b in row] for row in _rand_matrix(rng)]
        assert matmul_kernel(CFG, eye, B).C == B
        assert matmul_kernel(CFG, zero, B).C == zero


def test_random_kernels_match_same_order_oracle():
    rng = random.Random(11)
    for _ in range(100):
        A, B = _rand_matrix(rng), _rand_matrix(rng)
        res = matmul_kernel(CFG, A, B)
        assert res.C == matmul_reference(A, B, P8E2)
        assert (res.cycles, res.issues) == (21 + 2 * 25, 3)


def test_kernel_cycles_prediction():
    for lanes in (1, 8, 27, 128):
        cfg = VectorUnitConfig(lanes=lanes)
        A = _rand_matrix(random.Random(lanes))
        assert matmul_kernel(cfg, A, A).cycles == kernel_cycles(cfg, KernelSpec())


def test_rectangular_and_unsupported():
    A = [[0x40, 0x40]]
    B = [[0x40], [0x40]]
    assert matmul_kernel(CFG, A, B).C == [[0x48]]
    with pytest.raises(VectorError):
        matmul_kernel(CFG, [[1, 2]], [[1, 2]])
    with pytest.raises(VectorError):
        matmul_kernel(CFG, [[1]], [[1]], "p32e2")


def test_matrix_io(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"matrix": [[1, "0.5"], ["1/4", -2]]}))
    M = load_matrix(path, P8E2)
    assert M == [[0x40, 0x38], [0x30, 0xB8]]
    d = dump_matrix(M, P8E2)
    assert d["hex"][0] == ["0x40", "0x38"] and d["decimal"][1] == ["0.25", "-2"]
    path.write_text("[1, 2]")
    with pytest.raises(VectorError):
        load_matrix(path, P8E2)


def test_schedule_conservation_up_to_8x8():
    for lanes in (1, 7, 128):
        cfg = VectorUnitConfig(lanes=lanes)
        for rows, cols, inner in itertools.product(range(1, 9), repeat=3):
            sched = schedule_matmul(cfg, KernelSpec(rows, cols, inner))
            muls = sum(len(op.jobs) for op in sched if op.operation == "MUL")
            adds = sum(len(op.jobs) for op in sched if op.operation == "ADD")
            assert muls == rows * cols * inner and adds == rows * cols * (inner - 1)
            assert all(len(op.jobs) <= lanes for op in sched)

@pytest.mark.parametrize("op, name", [("ADD", "fp16"), ("MUL", "p16e2"), ("XOR", "int8"), ("COMP", "int16"),
                                      ("MUL", "int4"), ("ADD", "fp8")])
def test_lane_independence(op, name):
    fmt = formats.parse_format(name)
    rng = random.Random(name)
    a = [rng.getrandbits(fmt.width) for _ in range(64)]
    b = [rng.getrandbits(fmt.width) for _ in range(64)]
    out, cycles = vector_exec(CFG, op, fmt, a, b)
    singles = [engine.exec_op(core.TaluState(), op, fmt, x, y) for x, y in zip(a, b)]
    assert out == [r.bits for r in singles]
    assert cycles == singles[0].total_cycles
