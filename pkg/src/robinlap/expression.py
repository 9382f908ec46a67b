"""Safe evaluation of arithmetic expressions in the boundary coordinates.

Accepted names: ``x1 .. x{d}``, ``r`` (the tangential radius ``|x'|``, also
written ``|x'|``), ``pi``, ``e``, ``I`` / ``j`` (imaginary unit), and the
functions listed in :data:`FUNCTIONS`.  Python complex literals such as
``0.5j`` work as well.
"""

from __future__ import annotations

import ast
import operator as op

import numpy as np

from .errors import ExpressionError

FUNCTIONS = {
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "arctan": np.arctan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "real": np.real, "imag": np.imag,
}
CONSTANTS = {"pi": np.pi, "e": np.e, "I": 1j, "j": 1j}

_BINARY = {ast.Add: op.add, ast.Sub: op.sub, ast.Mult: op.mul,
           ast.Div: op.truediv, ast.Pow: op.pow}
_UNARY = {ast.UAdd: op.pos, ast.USub: op.neg}


def _normalize(text: str) -> str:
    return text.replace("|x'|", "r").replace("|x′|", "r").replace("^", "**")


def parse_expression(text: str, boundary_dim: int) -> ast.Expression:
    """Parse and validate ``text``; raises :class:`ExpressionError`."""
    try:
        tree = ast.parse(_normalize(text), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    allowed = {f"x{k + 1}" for k in range(boundary_dim)} | {"r"}
    allowed |= set(CONSTANTS)
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            if node.id not in allowed and node.id not in FUNCTIONS:
                raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS):
                raise ExpressionError(f"unsupported call in {text!r}")
            if node.keywords or len(node.args) != 1:
                raise ExpressionError(f"functions take one argument in {text!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINARY:
                raise ExpressionError(f"unsupported operator in {text!r}")
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ExpressionError(f"unsupported operator in {text!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float, complex)):
                raise ExpressionError(f"non-numeric literal in {text!r}")
        elif not isinstance(node, (ast.Expression, ast.Load, ast.operator,
                                   ast.unaryop)):
            raise ExpressionError(
                f"unsupported syntax {type(node).__name__} in {text!r}")
    return tree


def evaluate_expression(text: str, coords: list[np.ndarray]) -> np.ndarray:
    """Evaluate ``text`` with ``x1..xd`` bound to ``coords`` (broadcastable)."""
    tree = parse_expression(text, len(coords))
    env = dict(CONSTANTS)
    for k, c in enumerate(coords):
        env[f"x{k + 1}"] = c
    env["r"] = np.sqrt(sum(c ** 2 for c in coords)) if coords else 0.0

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINARY[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](ev(node.args[0]))
        raise ExpressionError(f"cannot evaluate {ast.dump(node)}")

    with np.errstate(all="ignore"):
        try:
            value = ev(tree)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise ExpressionError(f"evaluating {text!r} failed: {exc}") from None
    return np.asarray(value, dtype=complex)
