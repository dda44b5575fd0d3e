"""Small arithmetic expression language for user-supplied curvature data.

Expressions are parsed with :mod:`ast` and compiled into nested closures;
nothing is ever passed to ``eval``.  The grammar is::

    expr    := expr ('+' | '-' | '*' | '/' | '**') expr
             | ('-' | '+') expr
             | NUMBER | NAME | FUNC '(' expr ')'
             | 'const' '(' NUMBER ')'
    FUNC    := sin cos tan cot sinh cosh tanh coth exp log sqrt abs

``NAME`` is resolved against the variables the caller allows (``s`` for
family branches; ``e1``..``en``, ``sumsq``, ``theta2`` and ``n`` for
Weingarten functions) plus the constants ``pi`` and ``e``.
"""

import ast
import math
import operator

import numpy as np

from .errors import SchemaError


def _cot(x):
    return np.cos(x) / np.sin(x)


def _coth(x):
    return 1.0 / np.tanh(x)


# numpy ufuncs so that compiled expressions accept scalars and arrays alike
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "cot": _cot,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "coth": _coth,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


class Expression:
    """A compiled expression.

    Calling it with keyword arguments for the free variables returns a float,
    or an array when any argument is an array.
    ``source`` keeps the original text (used for serialization).
    """

    def __init__(self, source, variables):
        if not isinstance(source, str) or not source.strip():
            raise SchemaError("expression must be a non-empty string")
        self.source = source
        self.variables = frozenset(variables)
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise SchemaError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self.names = set()
        self._fn = self._compile(tree.body)

    def __call__(self, **env):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            value = self._fn(env)
        if np.ndim(value) == 0:
            return float(value)
        return np.asarray(value, dtype=float)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def _compile(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise SchemaError(f"unsupported literal {node.value!r}")
            value = float(node.value)
            return lambda env: value
        if isinstance(node, ast.Name):
            name = node.id
            if name in self.variables:
                self.names.add(name)
                return lambda env: env[name]
            if name in CONSTANTS:
                value = CONSTANTS[name]
                return lambda env: value
            raise SchemaError(f"unknown name {name!r} in expression {self.source!r}")
        if isinstance(node, ast.UnaryOp):
            inner = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            if isinstance(node.op, ast.UAdd):
                return inner
            raise SchemaError("unsupported unary operator")
        if isinstance(node, ast.BinOp):
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise SchemaError("unsupported binary operator")
            left = self._compile(node.left)
            right = self._compile(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.keywords or len(node.args) != 1:
                raise SchemaError(f"malformed call in expression {self.source!r}")
            fname = node.func.id
            if fname == "const":
                arg = node.args[0]
                if not isinstance(arg, ast.Constant) or not isinstance(arg.value, (int, float)):
                    raise SchemaError("const() takes a numeric literal")
                value = float(arg.value)
                return lambda env: value
            fn = FUNCTIONS.get(fname)
            if fn is None:
                raise SchemaError(f"unknown function {fname!r}")
            arg = self._compile(node.args[0])
            return lambda env: fn(arg(env))
        raise SchemaError(f"unsupported syntax in expression {self.source!r}")


def compile_expression(source, variables):
    return Expression(source, variables)
