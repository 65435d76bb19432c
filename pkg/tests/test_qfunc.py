import pytest
from hypothesis import given, strategies as st

from talu.qfunc import (
    Cluster, ClusterRequest, MappingError, Opcode, QArgs, add_carries, add_sum, decode_threshold, decode_vector,
    eval_cluster, eval_q, eval_q_bitwise, home_cluster, map_operation, xor_bits,
)


def test_eval_q_examples():
    assert eval_q(QArgs(8, 0, 0, 0, 0)) == 1
    assert eval_q(QArgs(8, 0, 1, 1, 1)) == 0  # AND slot with A_i=1, B_i=0
    assert eval_q(QArgs(8, 0, 116, 0, 112)) == 1  # decode slot 4 on T=116


def test_mapping_rows():
    assert map_operation(Opcode.AND, 1, 0, 0) == QArgs(8, 0, 1, 1, 1)
    assert map_operation(Opcode.NOT, 0, 1, 0) == QArgs(8, 0, 0, 1, 0)
    assert eval_q(map_operation(Opcode.NOT, 0, 1, 0)) == 0
    a, b = 0b10110110, 0b01101011
    assert map_operation(Opcode.ADD_CARRY, a, b, 3) == QArgs(8, 0, a & 0xF, 1, ~b & 0xF)
    carries = 0b1_0101_0100
    args = map_operation(Opcode.ADD_SUM, a, b, 2, aux=carries)
    assert args == QArgs(8, 1, 0, 0, 0b00)  # A_2=1, B_2=0, C_3=0, C_2=1
    assert decode_threshold(8, 4) == 112
    assert map_operation(Opcode.POSIT_DECODE, 116, 0, 4) == QArgs(8, 0, 116, 0, 112)


def test_mapping_errors():
    with pytest.raises(MappingError):
        map_operation(Opcode.AND, 0, 0, 8)
    with pytest.raises(MappingError):
        map_operation("FOO", 0, 0, 0)
    with pytest.raises(MappingError):
        QArgs(8, 0, 256, 0, 0)


def test_home_clusters():
    assert home_cluster(Opcode.ADD_CARRY) is Cluster.PC
    assert home_cluster(Opcode.XOR_STEP2) is Cluster.SC


def test_cluster_examples():
    assert eval_cluster(ClusterRequest(Opcode.AND, 0xF0, 0xCC)) == 0xC0
    assert eval_cluster(ClusterRequest(Opcode.AND, 0xF0, 0xCC, enabled=[False] * 8)) is None
    v = eval_cluster(ClusterRequest(Opcode.POSIT_DECODE, 116))
    assert v == 0b1110000 and bin(v).count("1") == 3


def test_decode_vector_is_leading_run_exhaustive():
    for p in (8, 9):
        width = p - 1
        for t in range(1 << width):
            v = decode_vector(t, p)
            run = len(format(t, f"0{width}b")) - len(format(t, f"0{width}b").lstrip("1"))
            assert v == ((1 << width) - 1) ^ ((1 << (width - run)) - 1)


def test_eight_bit_identities_exhaustive():
    for a in range(256):
        for b in range(256):
            assert eval_cluster(ClusterRequest(Opcode.AND, a, b)) == a & b
            assert eval_cluster(ClusterRequest(Opcode.OR, a, b)) == a | b
            assert eval_cluster(ClusterRequest(Opcode.NOT, a, b)) == ~b & 0xFF
            assert xor_bits(a, b) == a ^ b
            assert eval_cluster(ClusterRequest(Opcode.COMP, a, b)) >> 7 == int(a >= b)
            for cin in (0, 1):
                c = add_carries(a, b, cin)
                assert add_sum(a, b, c) | ((c >> 8) << 8) == a + b + cin


@given(st.integers(1, 8).flatmap(lambda p: st.tuples(
    st.just(p), st.integers(0, 1 << p), st.integers(0, (1 << p) - 1),
    st.integers(0, 1 << p), st.integers(0, (1 << p) - 1))))
def test_packed_and_bitwise_sums_agree(t):
    args = QArgs(*t)
    assert eval_q(args) == eval_q_bitwise(args)


@given(st.integers(1, 8).flatmap(lambda p: st.tuples(st.just(p), st.integers(0, (1 << p) - 1),
                                                     st.integers(0, (1 << p) - 1), st.integers(0, 1))))
def test_narrow_slices_add(t):
    p, a, b, cin = t
    c = add_carries(a, b, cin, p)
    assert add_sum(a, b, c, p) | ((c >> p) << p) == a + b + cin
    assert xor_bits(a, b, p) == a ^ b
