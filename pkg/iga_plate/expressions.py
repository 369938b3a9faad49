"""
Load expressions for custom problems.

Grammar: numbers, the coordinates x and y, the constant pi, + - * /, powers
(** or ^), parentheses and the functions sin, cos, atan2. Parsed with sympy
against a closed namespace and compiled to a numpy function f(x, y).
"""

from __future__ import annotations

import re
from tokenize import TokenError

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    auto_number,
    convert_xor,
    factorial_notation,
    parse_expr,
)

from iga_plate.assembly import LoadFunction
from iga_plate.core import ConfigError

x_sym, y_sym = sp.symbols("x y", real=True)

ALLOWED_NAMES: dict[str, object] = {
    "x":     x_sym,
    "y":     y_sym,
    "pi":    sp.pi,
    "sin":   sp.sin,
    "cos":   sp.cos,
    "atan2": sp.atan2,
}

# identifiers not glued to a numeric literal (so the exponent in 1e4 is skipped)
_IDENTIFIER = re.compile(r"(?<![\d.])[A-Za-z_][A-Za-z_0-9]*")
_ALLOWED_CHARS = re.compile(r"^[\sA-Za-z_0-9.+\-*/^(),]*$")


def parse_expression(text: str) -> sp.Expr:
    if not text or not text.strip():
        raise ConfigError("load expression is empty")
    if not _ALLOWED_CHARS.match(text):
        raise ConfigError(f"load expression {text!r} contains characters outside the grammar")
    unknown = sorted({name for name in _IDENTIFIER.findall(text) if name not in ALLOWED_NAMES})
    if unknown:
        raise ConfigError(
            f"load expression {text!r} uses unknown names {unknown}; allowed: {sorted(ALLOWED_NAMES)}"
        )
    try:
        expr = parse_expr(
            text,
            local_dict=dict(ALLOWED_NAMES),
            global_dict={"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational},
            transformations=(auto_number, factorial_notation, convert_xor),
        )
    except (SyntaxError, TokenError, TypeError, ValueError, sp.SympifyError) as exc:
        raise ConfigError(f"cannot parse load expression {text!r}: {exc}") from exc
    if not isinstance(expr, sp.Expr) or not expr.free_symbols <= {x_sym, y_sym}:
        raise ConfigError(f"load expression {text!r} must be a scalar expression in x and y")
    return expr


def compile_load(text: str) -> LoadFunction:
    """Expression text -> vectorised f(x, y) returning an array shaped like x."""
    expr = parse_expression(text)
    func = sp.lambdify((x_sym, y_sym), expr, modules="numpy")

    def load(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        value = np.asarray(func(x, y), dtype=float)
        return np.broadcast_to(value, np.broadcast(x, y).shape).copy()

    load.__doc__ = f"f(x, y) = {text}"
    return load
