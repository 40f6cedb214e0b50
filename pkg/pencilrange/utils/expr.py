"""Coefficient expressions of experiment documents

Grammar: numbers, complex literals (2j, i, j), the variable, pi, e,
+ - * / ^ and parentheses, and the functions exp, sin, cos, sqrt, abs,
sign, re, im and step(a, b). `step(a, b)` is 0 left of a, 1 right of b and
linear in between, a Heaviside jump when a = b.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import numpy.typing as npt

from ..errors import ExpressionError

Array = npt.NDArray[Any]

_OPERATORS = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)

_CONSTANTS = {"i": 1j, "j": 1j, "pi": np.pi, "e": np.e}


def _step(x: Array, left: float, right: float) -> Array:
    x = np.real(np.asarray(x))
    if right <= left:
        return (x >= left).astype(float)
    return np.clip((x - left) / (right - left), 0.0, 1.0)


_FUNCTIONS: dict[str, Callable[..., Any]] = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.lib.scimath.sqrt,
    "abs": np.abs,
    "sign": lambda v: np.sign(np.real(v)),
    "re": np.real,
    "im": np.imag,
}


@dataclass(frozen=True)
class Expression:
    """A coefficient given as text, evaluated elementwise on numpy arrays

    Arguments:
        source: the expression text
        variable: name of the free variable, "x" for potentials, "n" for sequences
        path: dotted path of the document field, used in diagnostics
    """

    source: str
    variable: str = "x"
    path: Optional[str] = None
    _code: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_code", compile_expression(self.source, self.variable, self.path))

    def __call__(self, values: Array) -> Array:
        values = np.asarray(values)
        if np.issubdtype(values.dtype, np.integer):
            values = values.astype(float)
        namespace: dict[str, Any] = dict(_CONSTANTS)
        namespace.update(_FUNCTIONS)
        namespace["step"] = lambda a, b: _step(values, float(np.real(a)), float(np.real(b)))
        namespace[self.variable] = values
        try:
            with np.errstate(all="ignore"):
                result = eval(self._code, {"__builtins__": {}}, namespace)  # pylint: disable=eval-used
        except (ArithmeticError, TypeError, ValueError) as exc:
            raise ExpressionError(f"cannot evaluate {self.source!r}: {exc}", self.path) from exc
        return np.broadcast_to(np.asarray(result, dtype=np.complex128), values.shape).copy()

    def __str__(self) -> str:
        return self.source


def compile_expression(source: str, variable: str = "x", field_name: Optional[str] = None) -> Any:
    """Validate `source` against the grammar and compile it

    Raises:
        ExpressionError: for syntax errors and names or constructs outside the grammar
    """
    text = source.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"invalid expression {source!r}: {exc.msg}", field_name) from exc
    allowed_names = set(_CONSTANTS) | {variable}
    for node in ast.walk(tree):
        if not isinstance(node, _OPERATORS):
            raise ExpressionError(
                f"{type(node).__name__} is not allowed in {source!r}", field_name
            )
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, complex)):
            raise ExpressionError(f"only numeric literals are allowed in {source!r}", field_name)
        if isinstance(node, ast.Call):
            name = node.func.id if isinstance(node.func, ast.Name) else None
            if name not in _FUNCTIONS and name != "step":
                raise ExpressionError(f"unknown function {name!r} in {source!r}", field_name)
            if name == "step" and len(node.args) != 2:
                raise ExpressionError(f"step takes two arguments in {source!r}", field_name)
            if node.keywords:
                raise ExpressionError(f"keyword arguments are not allowed in {source!r}", field_name)
        elif isinstance(node, ast.Name) and node.id not in allowed_names:
            # function names are checked with their call
            if not _is_callee(tree, node):
                raise ExpressionError(f"unknown name {node.id!r} in {source!r}", field_name)
    tree = ast.fix_missing_locations(_FloatLiterals().visit(tree))
    return compile(tree, "<expression>", "eval")


class _FloatLiterals(ast.NodeTransformer):
    """Integer literals as floats, so powers of literals overflow"""

    def visit_Constant(self, node: ast.Constant) -> ast.Constant:  # pylint: disable=invalid-name
        if isinstance(node.value, int) and not isinstance(node.value, bool):
            return ast.copy_location(ast.Constant(float(node.value)), node)
        return node


def _is_callee(tree: ast.AST, name: ast.Name) -> bool:
    return any(isinstance(node, ast.Call) and node.func is name for node in ast.walk(tree))


def parse_coefficient(value: Any, variable: str = "x", field_name: Optional[str] = None) -> Any:
    """A constant for numbers and [re, im] pairs, an Expression for strings"""
    if isinstance(value, str):
        return Expression(value, variable, field_name)
    if isinstance(value, list) and len(value) == 2:
        return complex(value[0], value[1])
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    raise ExpressionError(f"expected a number, [re, im] or an expression, got {value!r}", field_name)
