"""A tiny arithmetic language for forcing, boundary data and exact solutions.

Accepted: numeric literals, ``x``, ``y``, ``z``, ``pi``, the binary
operators ``+ - * /`` and ``^`` (or ``**``) for powers, unary signs, and
calls to ``sin``, ``cos`` and ``exp``. Evaluation is vectorized over numpy
arrays.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

__all__ = ["Expression", "ExpressionError", "expression_eval"]

COORDS = ("x", "y", "z")
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": np.pi}
BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
          ast.Div: operator.truediv, ast.Pow: operator.pow}
UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    """Parse or evaluation failure; ``position`` is a 0-based column when known."""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        if position is not None:
            message = f"{message} at column {position + 1}: {text!r}"
        super().__init__(message)
        self.text = text
        self.position = position


def _to_python(text: str) -> tuple:
    """Rewrite ``^`` as ``**`` and keep a map back to original columns."""
    out, origin = [], []
    for i, ch in enumerate(text):
        if ch == "^":
            out.append("**")
            origin.extend([i, i])
        else:
            out.append(ch)
            origin.append(i)
    origin.append(len(text))
    return "".join(out), origin


class Expression:
    """A parsed expression; call with coordinate arrays ``f(x, y, z)``."""

    def __init__(self, text: str):
        self.text = text.strip()
        if not self.text:
            raise ExpressionError("empty expression", text, 0)
        source, self._origin = _to_python(self.text)
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            col = (exc.offset or 1) - 1
            col = self._origin[min(max(col, 0), len(self._origin) - 1)]
            raise ExpressionError(f"syntax error ({exc.msg})", self.text, col) from None
        self._tree = tree.body
        self.variables = frozenset()
        self._check(self._tree)

    def _where(self, node) -> int:
        col = getattr(node, "col_offset", 0)
        return self._origin[min(col, len(self._origin) - 1)]

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in BINARY:
                raise ExpressionError("unsupported operator", self.text, self._where(node))
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in UNARY:
                raise ExpressionError("unsupported operator", self.text, self._where(node))
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError("unknown function", self.text, self._where(node))
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError("functions take exactly one argument", self.text,
                                      self._where(node))
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id in COORDS:
                self.variables = self.variables | {node.id}
            elif node.id not in CONSTANTS:
                raise ExpressionError(f"unknown name {node.id!r}", self.text, self._where(node))
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError("only numeric literals are allowed", self.text,
                                      self._where(node))
        else:
            raise ExpressionError(f"unsupported syntax ({type(node).__name__})", self.text,
                                  self._where(node))

    @property
    def dimension(self) -> int:
        """Smallest number of coordinates the expression needs."""
        return max((COORDS.index(v) + 1 for v in self.variables), default=0)

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return BINARY[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](self._eval(node.args[0], env))
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, *coords):
        if len(coords) < self.dimension:
            raise ExpressionError(
                f"expression uses {COORDS[self.dimension - 1]!r} but only {len(coords)} "
                "coordinates were given", self.text)
        arrays = [np.asarray(c, dtype=float) for c in coords]
        env = dict(zip(COORDS, arrays))
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        try:
            with np.errstate(all="raise"):
                out = self._eval(self._tree, env)
        except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            raise ExpressionError(f"evaluation domain error: {exc}", self.text) from None
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy() if shape else float(out)

    def is_zero(self) -> bool:
        return isinstance(self._tree, ast.Constant) and float(self._tree.value) == 0.0

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"


def expression_eval(text: str, point) -> float:
    """Evaluate ``text`` at a single point given as a sequence of coordinates."""
    return float(Expression(text)(*np.atleast_1d(np.asarray(point, dtype=float))))
