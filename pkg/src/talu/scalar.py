"""Reference FP and INT semantics for the non-posit TALU formats.

Floats follow IEEE-754 conventions generalised to any (exp_bits, frac_bits)
split: bias 2^(e-1)-1, subnormals, all-ones exponent for Inf/NaN, and
round-to-nearest-even.  Arithmetic is exact-rational then rounded.  Integers
are two's complement with wraparound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union


@dataclass(frozen=True)
class FloatDescriptor:
    exp_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.exp_bits < 2 or self.frac_bits < 1:
            raise ValueError("float needs exp_bits >= 2 and frac_bits >= 1")
        if self.total not in (8, 16, 32):
            raise ValueError(f"float width must be 8, 16 or 32, got {self.total}")

    @property
    def total(self) -> int:
        return 1 + self.exp_bits + self.frac_bits

    @property
    def bias(self) -> int:
        return (1 << (self.exp_bits - 1)) - 1

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def exp_mask(self) -> int:
        return (1 << self.exp_bits) - 1

    @property
    def sign_bit(self) -> int:
        return 1 << (self.total - 1)

    @property
    def inf_bits(self) -> int:
        return self.exp_mask << self.frac_bits

    @property
    def nan_bits(self) -> int:
        """Canonical quiet NaN produced by every invalid operation."""
        return self.inf_bits | (1 << (self.frac_bits - 1))

    @property
    def max_finite_bits(self) -> int:
        return self.inf_bits - 1

    def __str__(self) -> str:
        return f"FP{self.total}(e={self.exp_bits},m={self.frac_bits})"


FP8 = FloatDescriptor(4, 3)
FP8_E3M4 = FloatDescriptor(3, 4)
FP16 = FloatDescriptor(5, 10)
FP32 = FloatDescriptor(8, 23)


@dataclass(frozen=True)
class IntDescriptor:
    width: int

    def __post_init__(self):
        if self.width < 2:
            raise ValueError("integer width must be >= 2")

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def to_signed(self, bits: int) -> int:
        bits &= self.mask
        return bits - (1 << self.width) if bits >> (self.width - 1) else bits

    def from_int(self, value: int) -> int:
        return value & self.mask

    def __str__(self) -> str:
        return f"INT{self.width}"


INT4 = IntDescriptor(4)
INT8 = IntDescriptor(8)
INT16 = IntDescriptor(16)
INT32 = IntDescriptor(32)


class FloatFields(NamedTuple):
    sign: int
    exponent: int  # unbiased; emin for subnormals
    significand: int  # includes the hidden bit for normals


class FloatSpecial(NamedTuple):
    kind: str  # "zero", "inf" or "nan"
    sign: int


def float_decode(bits: int, desc: FloatDescriptor, flush: bool = False) -> Union[FloatFields, FloatSpecial]:
    if not 0 <= bits < (1 << desc.total):
        raise ValueError(f"{bits:#x} does not fit in {desc.total} bits")
    sign = bits >> (desc.total - 1)
    exp = (bits >> desc.frac_bits) & desc.exp_mask
    frac = bits & ((1 << desc.frac_bits) - 1)
    if exp == desc.exp_mask:
        return FloatSpecial("nan" if frac else "inf", sign)
    if exp == 0:
        if frac == 0 or flush:
            return FloatSpecial("zero", sign)
        return FloatFields(sign, desc.emin, frac)
    return FloatFields(sign, exp - desc.bias, (1 << desc.frac_bits) | frac)


def float_to_rational(bits: int, desc: FloatDescriptor, flush: bool = False):
    """Exact value, or the FloatSpecial for Inf/NaN (zero maps to 0)."""
    dec = float_decode(bits, desc, flush)
    if isinstance(dec, FloatSpecial):
        return Fraction(0) if dec.kind == "zero" else dec
    value = Fraction(dec.significand) * Fraction(2) ** (dec.exponent - desc.frac_bits)
    return -value if dec.sign else value


def _floor_log2(value: Fraction) -> int:
    num, den = value.numerator, value.denominator
    e = num.bit_length() - den.bit_length()
    if e >= 0:
        if num < (den << e):
            e -= 1
    elif (num << -e) < den:
        e -= 1
    return e


def float_encode(value, desc: FloatDescriptor, flush: bool = False, sign_of_zero: int = 0) -> int:
    """Round an exact rational to the nearest float (ties to even).

    With ``flush`` set, results that land in the subnormal range become a
    signed zero.
    """
    value = Fraction(value)
    if value == 0:
        return desc.sign_bit if sign_of_zero else 0
    sign = desc.sign_bit if value < 0 else 0
    mag = abs(value)
    e = max(_floor_log2(mag), desc.emin)
    quantum = Fraction(2) ** (e - desc.frac_bits)
    scaled = mag / quantum
    q = scaled.numerator // scaled.denominator
    rest = scaled - q
    if rest > Fraction(1, 2) or (rest == Fraction(1, 2) and q & 1):
        q += 1
    # q counts quanta of the binade starting at 2^e; pattern arithmetic
    # carries into the exponent (and into Inf) exactly as the hardware does
    if q >= (1 << desc.frac_bits):
        biased = e + desc.bias
        bits = ((biased - 1) << desc.frac_bits) + q
    else:
        bits = q  # subnormal
    if bits >= desc.inf_bits:
        bits = desc.inf_bits
    if flush and (bits >> desc.frac_bits) == 0:
        bits = 0
    return sign | bits


def _special_result(a, b, desc: FloatDescriptor, op: str):
    """Inf/NaN/zero handling shared by add and mul; None when both are finite nonzero."""
    da, db = a, b
    nan = desc.nan_bits
    a_nan = isinstance(da, FloatSpecial) and da.kind == "nan"
    b_nan = isinstance(db, FloatSpecial) and db.kind == "nan"
    if a_nan or b_nan:
        return nan
    a_inf = isinstance(da, FloatSpecial) and da.kind == "inf"
    b_inf = isinstance(db, FloatSpecial) and db.kind == "inf"
    a_zero = isinstance(da, FloatSpecial) and da.kind == "zero"
    b_zero = isinstance(db, FloatSpecial) and db.kind == "zero"
    if op == "add":
        if a_inf and b_inf:
            return desc.inf_bits | (desc.sign_bit if da.sign else 0) if da.sign == db.sign else nan
        if a_inf:
            return desc.inf_bits | (desc.sign_bit if da.sign else 0)
        if b_inf:
            return desc.inf_bits | (desc.sign_bit if db.sign else 0)
        if a_zero and b_zero:
            return desc.sign_bit if (da.sign and db.sign) else 0
        return None
    sign = desc.sign_bit if (da.sign ^ db.sign) else 0
    if (a_inf and b_zero) or (b_inf and a_zero):
        return nan
    if a_inf or b_inf:
        return desc.inf_bits | sign
    if a_zero or b_zero:
        return sign
    return None


def float_add(a: int, b: int, desc: FloatDescriptor, flush: bool = False) -> int:
    da, db = float_decode(a, desc, flush), float_decode(b, desc, flush)
    special = _special_result(da, db, desc, "add")
    if special is not None:
        return special
    if isinstance(da, FloatSpecial):  # zero + finite
        return b if not flush else float_encode(float_to_rational(b, desc, flush), desc, flush)
    if isinstance(db, FloatSpecial):
        return a if not flush else float_encode(float_to_rational(a, desc, flush), desc, flush)
    total = float_to_rational(a, desc, flush) + float_to_rational(b, desc, flush)
    return float_encode(total, desc, flush)


def float_mul(a: int, b: int, desc: FloatDescriptor, flush: bool = False) -> int:
    da, db = float_decode(a, desc, flush), float_decode(b, desc, flush)
    special = _special_result(da, db, desc, "mul")
    if special is not None:
        return special
    product = float_to_rational(a, desc, flush) * float_to_rational(b, desc, flush)
    return float_encode(product, desc, flush, sign_of_zero=da.sign ^ db.sign)


def float_from_value(x, desc: FloatDescriptor, flush: bool = False) -> int:
    if isinstance(x, float):
        if x != x:
            return desc.nan_bits
        if x in (float("inf"), float("-inf")):
            return desc.inf_bits | (desc.sign_bit if x < 0 else 0)
    return float_encode(Fraction(x), desc, flush)


def float_to_value(bits: int, desc: FloatDescriptor) -> float:
    dec = float_to_rational(bits, desc)
    if isinstance(dec, FloatSpecial):
        if dec.kind == "nan":
            return float("nan")
        return float("-inf") if dec.sign else float("inf")
    if dec == 0 and bits & desc.sign_bit:
        return -0.0
    return float(dec)


def int_add(a: int, b: int, desc: IntDescriptor) -> int:
    return (a + b) & desc.mask


def int_mul(a: int, b: int, desc: IntDescriptor) -> int:
    # low bits of a two's complement product do not depend on signedness
    return (a * b) & desc.mask
