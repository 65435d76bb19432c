"""Number-format handles shared by the simulator, the vector unit and the CLI.

Format strings: ``p<n>e<es>`` (e.g. ``p8e2``), ``fp8`` (e4m3), ``fp8e3m4``,
``fp16``, ``fp32``, ``int4``, ``int8``, ``int16``, ``int32``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from . import posit, scalar


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class PositFormat:
    config: posit.PositConfig

    kind = "posit"

    @property
    def width(self) -> int:
        return self.config.n

    @property
    def name(self) -> str:
        return f"p{self.config.n}e{self.config.es}"

    @property
    def sig_bits(self) -> int:
        """Significand width including the hidden bit."""
        return self.config.max_frac_bits + 1

    def encode(self, value) -> int:
        return posit.rational_to_posit(Fraction(value), self.config).bits

    def value(self, bits: int):
        return posit.posit_to_rational(posit.PositWord(bits, self.config))

    def describe(self, bits: int) -> str:
        v = self.value(bits)
        return "NaR" if v is posit.NaR else _fmt_rational(v)


@dataclass(frozen=True)
class FloatFormat:
    desc: scalar.FloatDescriptor

    kind = "float"

    @property
    def width(self) -> int:
        return self.desc.total

    @property
    def name(self) -> str:
        d = self.desc
        if d == scalar.FP8:
            return "fp8"
        if d in (scalar.FP16, scalar.FP32):
            return f"fp{d.total}"
        return f"fp{d.total}e{d.exp_bits}m{d.frac_bits}"

    @property
    def sig_bits(self) -> int:
        return self.desc.frac_bits + 1

    def encode(self, value) -> int:
        return scalar.float_from_value(value, self.desc)

    def value(self, bits: int):
        return scalar.float_to_rational(bits, self.desc)

    def describe(self, bits: int) -> str:
        v = scalar.float_to_value(bits, self.desc)
        if v != v or v in (float("inf"), float("-inf")):
            return str(v)
        return _fmt_rational(self.value(bits)) if v != 0 or not (bits >> (self.width - 1)) else "-0"


@dataclass(frozen=True)
class IntFormat:
    desc: scalar.IntDescriptor

    kind = "int"

    @property
    def width(self) -> int:
        return self.desc.width

    @property
    def name(self) -> str:
        return f"int{self.desc.width}"

    def encode(self, value) -> int:
        v = Fraction(value)
        if v.denominator != 1:
            raise FormatError(f"{value} is not an integer")
        return self.desc.from_int(int(v))

    def value(self, bits: int):
        return Fraction(self.desc.to_signed(bits))

    def describe(self, bits: int) -> str:
        return str(self.desc.to_signed(bits))


Format = Union[PositFormat, FloatFormat, IntFormat]

_POSIT_RE = re.compile(r"^p(\d+)e(\d+)$")
_FLOAT_RE = re.compile(r"^fp(\d+)e(\d+)m(\d+)$")


def parse_format(text: str) -> Format:
    s = text.strip().lower()
    m = _POSIT_RE.match(s)
    if m:
        try:
            return PositFormat(posit.PositConfig(int(m.group(1)), int(m.group(2))))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    named_floats = {"fp8": scalar.FP8, "fp16": scalar.FP16, "fp32": scalar.FP32}
    if s in named_floats:
        return FloatFormat(named_floats[s])
    m = _FLOAT_RE.match(s)
    if m:
        total, e, f = map(int, m.groups())
        try:
            desc = scalar.FloatDescriptor(e, f)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        if desc.total != total:
            raise FormatError(f"{text}: 1+{e}+{f} != {total}")
        return FloatFormat(desc)
    if s.startswith("int") and s[3:].isdigit() and int(s[3:]) in (4, 8, 16, 32):
        return IntFormat(scalar.IntDescriptor(int(s[3:])))
    raise FormatError(f"unknown format {text!r} (expected p<n>e<es>, fp8, fp16, int4, int8 or int16)")


def _fmt_rational(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    f = float(v)
    return repr(f) if abs(f) >= 1e-4 else f"{f:.6e}"


def parse_value(fmt: Format, text: str) -> Fraction:
    """Decimal literal, or an exact fraction such as ``1/4096``."""
    try:
        return Fraction(text)
    except ValueError:
        raise FormatError(f"cannot parse number {text!r}") from None
