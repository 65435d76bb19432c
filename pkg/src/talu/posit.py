"""Reference Posit arithmetic.

Bit-exact decode/encode of P(n, es) words, the exact dyadic value of every
pattern, and round-to-nearest-even add/multiply.  Everything here is computed
through :class:`fractions.Fraction`, so this module is the oracle the TALU
simulator is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union


class NaRType:
    """Singleton for the 10...0 pattern (not-a-real)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NaR"


class ZeroType:
    """Singleton returned by :func:`decode_reference` for the all-zeros word."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Zero"


NaR = NaRType()
Zero = ZeroType()


class IncomparableError(ValueError):
    """Raised when NaR takes part in an ordered comparison."""


@dataclass(frozen=True)
class PositConfig:
    n: int
    es: int

    def __post_init__(self):
        if not 4 <= self.n <= 32:
            raise ValueError(f"posit width must be in [4, 32], got {self.n}")
        if not 0 <= self.es <= 3:
            raise ValueError(f"es must be in [0, 3], got {self.es}")
        if self.n < self.es + 2:
            raise ValueError("n must be at least es + 2")

    @property
    def useed_log2(self) -> int:
        return 1 << self.es

    @property
    def useed(self) -> int:
        return 1 << self.useed_log2

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def nar_bits(self) -> int:
        return 1 << (self.n - 1)

    @property
    def maxpos_bits(self) -> int:
        return (1 << (self.n - 1)) - 1

    @property
    def minpos_bits(self) -> int:
        return 1

    @property
    def max_scale(self) -> int:
        """log2 of maxpos."""
        return (self.n - 2) << self.es

    @property
    def max_frac_bits(self) -> int:
        return max(0, self.n - 3 - self.es)

    def __str__(self) -> str:
        return f"P({self.n},{self.es})"


@dataclass(frozen=True)
class PositWord:
    bits: int
    config: PositConfig

    def __post_init__(self):
        if not 0 <= self.bits <= self.config.mask:
            raise ValueError(f"{self.bits:#x} does not fit in {self.config.n} bits")

    def is_zero(self) -> bool:
        return self.bits == 0

    def is_nar(self) -> bool:
        return self.bits == self.config.nar_bits

    def __str__(self) -> str:
        return format(self.bits, f"0{self.config.n}b")


@dataclass(frozen=True)
class PositFields:
    """Decoded fields of a non-special posit.

    ``exponent`` is already left-aligned to ``es`` bits: when the regime
    leaves fewer than ``es`` bits, the missing low bits read as zero and
    ``exponent_len`` records how many were physically present.
    """

    sign: int
    regime_value: int
    regime_len: int
    exponent: int
    exponent_len: int
    fraction: int
    fraction_len: int
    has_stop_bit: bool = True


def fields_scale(fields: PositFields, es: int) -> int:
    return (fields.regime_value << es) + fields.exponent


Decoded = Union[PositFields, ZeroType, NaRType]


def _twos(bits: int, n: int) -> int:
    return (-bits) & ((1 << n) - 1)


def decode_reference(word: PositWord) -> Decoded:
    """Split a posit into S/K/E/F by scanning the regime run bit by bit."""
    cfg = word.config
    n, es = cfg.n, cfg.es
    if word.bits == 0:
        return Zero
    if word.bits == cfg.nar_bits:
        return NaR
    sign = word.bits >> (n - 1)
    body = _twos(word.bits, n) if sign else word.bits

    lead = (body >> (n - 2)) & 1
    run = 0
    pos = n - 2
    while pos >= 0 and ((body >> pos) & 1) == lead:
        run += 1
        pos -= 1
    has_stop = pos >= 0
    if has_stop:
        pos -= 1  # skip the stop bit
    k = run - 1 if lead else -run

    remaining = pos + 1
    exp_len = min(es, remaining)
    exp_bits = (body >> (remaining - exp_len)) & ((1 << exp_len) - 1) if exp_len else 0
    exponent = exp_bits << (es - exp_len)
    frac_len = remaining - exp_len
    fraction = body & ((1 << frac_len) - 1)
    return PositFields(sign, k, run, exponent, exp_len, fraction, frac_len, has_stop)


def fields_to_rational(fields: PositFields, es: int) -> Fraction:
    """Evaluate the posit value formula on decoded fields."""
    scale = (fields.regime_value << es) + fields.exponent
    mant = Fraction((1 << fields.fraction_len) + fields.fraction, 1 << fields.fraction_len)
    value = mant * (Fraction(2) ** scale)
    return -value if fields.sign else value


def posit_to_rational(word: PositWord) -> Union[Fraction, NaRType]:
    dec = decode_reference(word)
    if dec is Zero:
        return Fraction(0)
    if dec is NaR:
        return NaR
    return fields_to_rational(dec, word.config.es)


def _floor_log2(value: Fraction) -> int:
    """floor(log2(value)) for a positive rational."""
    num, den = value.numerator, value.denominator
    e = num.bit_length() - den.bit_length()
    # adjust so that 2^e <= value < 2^(e+1)
    if e >= 0:
        if num < (den << e):
            e -= 1
    else:
        if (num << -e) < den:
            e -= 1
    return e


def rational_to_posit(value, config: PositConfig) -> PositWord:
    """Round an exact rational to the nearest posit.

    Rounding is performed on the posit bit string (regime, exponent,
    fraction, then round and sticky bits) with ties to the even pattern.
    Nonzero values saturate to minpos/maxpos instead of rounding to zero or
    NaR.
    """
    value = Fraction(value)
    n, es = config.n, config.es
    if value == 0:
        return PositWord(0, config)
    negative = value < 0
    mag = -value if negative else value

    scale = _floor_log2(mag)
    if scale >= config.max_scale:
        bits = config.maxpos_bits
    elif scale < -config.max_scale:
        bits = config.minpos_bits
    else:
        k = scale >> es
        exp = scale - (k << es)
        if k >= 0:
            regime, regime_len = ((1 << (k + 1)) - 1) << 1, k + 2
        else:
            regime, regime_len = 1, -k + 1
        # 1.f = mag / 2^scale, f in [0, 1)
        frac = mag / (Fraction(2) ** scale) - 1
        head = (regime << es) | exp
        # head.frac as one bit string, rescaled so n-1 bits sit above the point
        shifted = (head + frac) * Fraction(2) ** (n - 1 - regime_len - es)
        bits = shifted.numerator // shifted.denominator
        rest = shifted - bits
        half = Fraction(1, 2)
        round_bit = rest >= half
        sticky = rest > half if round_bit else rest != 0
        if round_bit and (sticky or (bits & 1)):
            bits += 1
        # rounding never reaches NaR or zero: the regime always holds a 1
        # and maxpos is only reachable through the saturation branch.
    if negative:
        bits = _twos(bits, n)
    return PositWord(bits, config)


def posit_negate(a: PositWord) -> PositWord:
    return PositWord(_twos(a.bits, a.config.n), a.config)


def _check_same(a: PositWord, b: PositWord):
    if a.config != b.config:
        raise ValueError(f"config mismatch: {a.config} vs {b.config}")


def posit_add(a: PositWord, b: PositWord) -> PositWord:
    _check_same(a, b)
    if a.is_nar() or b.is_nar():
        return PositWord(a.config.nar_bits, a.config)
    return rational_to_posit(posit_to_rational(a) + posit_to_rational(b), a.config)


def posit_sub(a: PositWord, b: PositWord) -> PositWord:
    return posit_add(a, posit_negate(b))


def posit_mul(a: PositWord, b: PositWord) -> PositWord:
    _check_same(a, b)
    if a.is_nar() or b.is_nar():
        return PositWord(a.config.nar_bits, a.config)
    return rational_to_posit(posit_to_rational(a) * posit_to_rational(b), a.config)


def signed_bits(word: PositWord) -> int:
    """The word read as an n-bit two's complement integer."""
    n = word.config.n
    return word.bits - (1 << n) if word.bits >> (n - 1) else word.bits


def posit_compare(a: PositWord, b: PositWord) -> int:
    """Return -1, 0 or 1.  Posit order is two's complement integer order."""
    _check_same(a, b)
    if a.is_nar() or b.is_nar():
        raise IncomparableError("NaR is unordered")
    sa, sb = signed_bits(a), signed_bits(b)
    return (sa > sb) - (sa < sb)


def posit_from_float(x: float, config: PositConfig) -> PositWord:
    return rational_to_posit(Fraction(x), config)


def posit_to_float(word: PositWord) -> float:
    v = posit_to_rational(word)
    return float("nan") if v is NaR else float(v)
