"""Transprecision ALU model: posit/float/int formats, Q-function clusters,
micro-programmed TALU, TALU-V vector unit and a performance model."""

from .formats import parse_format, parse_value
from .core import TaluState
from .engine import exec_op, reference_op

__all__ = ["parse_format", "parse_value", "TaluState", "exec_op", "reference_op"]
