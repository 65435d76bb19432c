from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from talu.posit import (
    NaR, IncomparableError, PositConfig, PositFields, PositWord, Zero, decode_reference, posit_add,
    posit_compare, posit_mul, posit_negate, posit_sub, posit_to_rational, rational_to_posit, signed_bits,
)

P8E2 = PositConfig(8, 2)
P8E0 = PositConfig(8, 0)
P16E2 = PositConfig(16, 2)


def w(bits, cfg=P8E2):
    return PositWord(bits, cfg)


def eq1_value(bits, cfg):
    """Independent evaluator: read sign, regime run, exponent and fraction bit by bit."""
    n, es = cfg.n, cfg.es
    if bits == 0:
        return Fraction(0)
    if bits == 1 << (n - 1):
        return None
    sign = bits >> (n - 1)
    if sign:
        bits = (-bits) & ((1 << n) - 1)
    s = format(bits, f"0{n}b")[1:]
    run = len(s) - len(s.lstrip(s[0]))
    k = run - 1 if s[0] == "1" else -run
    rest = s[run + 1:]
    e = int((rest[:es] + "0" * es)[:es] or "0", 2)
    frac = rest[es:]
    f = Fraction(int(frac, 2), 1 << len(frac)) if frac else Fraction(0)
    v = Fraction(2) ** (k * (1 << es) + e) * (1 + f)
    return -v if sign else v


def test_decode_regime_example():
    f = decode_reference(w(0b01110100))
    assert (f.sign, f.regime_value, f.exponent, f.fraction, f.fraction_len) == (0, 2, 2, 0, 1)


def test_decode_zero_and_nar():
    assert decode_reference(w(0)) is Zero
    assert decode_reference(w(0x80)) is NaR
    assert decode_reference(PositWord(0, P16E2)) is Zero


def test_decode_small_value_example():
    f = decode_reference(w(0b00001000))
    assert (f.sign, f.regime_value, f.exponent, f.fraction) == (0, -3, 0, 0)


@pytest.mark.parametrize("bits, value", [(0b00001000, Fraction(1, 4096)), (0b01000000, 1),
                                         (0b01110100, 1024), (0b00010000, Fraction(1, 256))])
def test_to_rational_examples(bits, value):
    assert posit_to_rational(w(bits)) == value


@pytest.mark.parametrize("cfg", [P8E0, P8E2, PositConfig(8, 1), PositConfig(6, 1)])
def test_to_rational_matches_bitwise_evaluator(cfg):
    for bits in range(1 << cfg.n):
        got = posit_to_rational(PositWord(bits, cfg))
        want = eq1_value(bits, cfg)
        assert (got is NaR) if want is None else got == want, hex(bits)


def test_encode_small_value_error():
    word = rational_to_posit(Fraction("0.00024"), P8E2)
    assert word.bits == 0b00001000
    err = abs(posit_to_rational(word) - Fraction("0.00024")) / Fraction("0.00024")
    assert float(err) == pytest.approx(0.01725, abs=5e-5)


def test_encode_zero_and_clamp():
    assert rational_to_posit(0, P8E2).bits == 0
    assert rational_to_posit(10 ** 9, P8E2).bits == 0x7F
    assert rational_to_posit(-10 ** 9, P8E2).bits == 0x81
    assert rational_to_posit(Fraction(1, 10 ** 12), P8E2).bits == 0x01


def test_add_examples():
    assert posit_add(w(0x40), w(0x40)).bits == 0x48
    assert posit_add(w(0x80), w(0x40)).bits == 0x80
    for x in range(256):
        if x != 0x80:
            assert posit_add(w(x), w(0)).bits == x


def test_mul_examples():
    assert posit_mul(w(0x48), w(0x48)).bits == 0x50
    assert posit_mul(w(0), w(0x80)).bits == 0x80
    for x in range(256):
        assert posit_mul(w(x), w(0x40)).bits == x


def test_negate_and_sub():
    assert posit_negate(w(0x40)).bits == 0xC0
    assert posit_negate(w(0)).bits == 0
    assert posit_negate(w(0x80)).bits == 0x80
    assert posit_sub(w(0x48), w(0x40)).bits == 0x40


def test_compare():
    assert posit_compare(w(0x48), w(0x40)) > 0
    assert posit_compare(w(0x40), w(0x40)) == 0
    assert posit_compare(w(0xC0), w(0x40)) < 0
    with pytest.raises(IncomparableError):
        posit_compare(w(0x80), w(0x40))


def test_mixed_configs_rejected():
    with pytest.raises(ValueError):
        posit_add(w(0x40), PositWord(0x40, P8E0))


def test_monotone_in_signed_order_exhaustive():
    for cfg in (P8E0, P8E2):
        words = sorted((PositWord(b, cfg) for b in range(256) if b != 0x80), key=signed_bits)
        vals = [posit_to_rational(x) for x in words]
        assert all(a < b for a, b in zip(vals, vals[1:]))


def test_round_trip_exhaustive():
    for cfg in (P8E0, P8E2):
        for b in range(256):
            if b != 0x80:
                assert rational_to_posit(posit_to_rational(PositWord(b, cfg)), cfg).bits == b


words8 = st.integers(0, 255).map(w)
words16 = st.integers(0, 0xFFFF).map(lambda b: PositWord(b, P16E2))


@given(words8, words8)
def test_add_mul_commute(a, b):
    assert posit_add(a, b) == posit_add(b, a)
    assert posit_mul(a, b) == posit_mul(b, a)


@given(words16)
def test_negation_is_exact(a):
    if a.bits != 0x8000:
        assert posit_to_rational(posit_negate(a)) == -posit_to_rational(a)


_P8E2_SORTED = sorted(posit_to_rational(w(b)) for b in range(256) if b != 0x80)


@given(st.fractions(min_value=-10 ** 6, max_value=10 ** 6))
def test_encode_lands_on_a_bracketing_neighbour(x):
    """Rounding happens on the bit string, so the result is the posit just
    below or just above x (clamped at minpos/maxpos), never anything farther."""
    got = posit_to_rational(rational_to_posit(x, P8E2))
    below = max((v for v in _P8E2_SORTED if v <= x), default=None)
    above = min((v for v in _P8E2_SORTED if v >= x), default=None)
    if x == 0:
        assert got == 0
    else:
        assert got in (below, above) and got != 0


@given(words16, words16)
def test_add_matches_rounded_exact_sum(a, b):
    if NaR in (posit_to_rational(a), posit_to_rational(b)):
        return
    want = rational_to_posit(posit_to_rational(a) + posit_to_rational(b), P16E2)
    assert posit_add(a, b) == want


def test_fields_type():
    assert isinstance(decode_reference(w(0x40)), PositFields)


def test_fields_account_for_every_bit_and_reproduce_value():
    from talu.posit import fields_to_rational

    for cfg in (P8E0, P8E2, PositConfig(8, 3)):
        for bits in range(256):
            f = decode_reference(PositWord(bits, cfg))
            if not isinstance(f, PositFields):
                continue
            assert f.regime_len + f.has_stop_bit + f.exponent_len + f.fraction_len == cfg.n - 1
            assert fields_to_rational(f, cfg.es) == eq1_value(bits, cfg)


@given(words16, words16)
def test_16bit_signed_order_is_value_order(a, b):
    if 0x8000 in (a.bits, b.bits):
        return
    sa, sb = signed_bits(a), signed_bits(b)
    va, vb = posit_to_rational(a), posit_to_rational(b)
    assert (sa < sb) == (va < vb) and (sa == sb) == (va == vb)
