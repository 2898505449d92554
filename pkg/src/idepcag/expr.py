"""Small arithmetic expression language for coefficient declarations.

Grammar (EBNF)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right associative
    atom    := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"
    NAME    := "t" | "k" | "pi" | "e" | function name
    NUMBER  := digits ["." digits] [("e"|"E") ["+"|"-"] digits]

Functions: sin, cos, exp, ln, abs, floor.  Variables: ``t`` (continuous
time) and ``k`` (integer node index).  ``^`` binds tighter than unary
minus, so ``-2^2 == -4``; exponents may themselves be signed (``2^-3``).

Evaluation is pure and accepts scalar or NumPy array bindings (array
bindings broadcast, which is how coefficient matrices are sampled on
quadrature grids in one call).  Any operation that leaves the real
domain -- ``ln`` of a nonpositive value, division by zero, a non-finite
result -- raises :class:`~idepcag.errors.EvalDomainError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EvalDomainError, ExpressionSyntaxError

__all__ = ["Expression", "parse", "Num", "Name", "Unary", "Binary", "Call"]

_FUNCTIONS = ("sin", "cos", "exp", "ln", "abs", "floor")
_CONSTANTS = {"pi": np.pi, "e": np.e}
_VARIABLES = ("t", "k")


class Expression:
    """Base class for AST nodes.

    Nodes compare structurally; source offsets are carried for error
    reporting but excluded from equality so that parse/print round-trips
    compare equal.
    """

    def eval(self, **bindings):
        """Evaluate with the given variable bindings (scalars or arrays)."""
        raise NotImplementedError

    def variables(self) -> frozenset:
        """Set of variable names referenced anywhere in the tree."""
        raise NotImplementedError

    def to_source(self) -> str:
        """Render back to parseable source text."""
        return self._render(0)

    def _render(self, parent_prec: int) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_source()


# Precedence levels used both by the parser and the printer.
_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class Num(Expression):
    value: float
    pos: int = field(default=0, compare=False)

    def eval(self, **bindings):
        return self.value

    def variables(self):
        return frozenset()

    def _render(self, parent_prec):
        if self.value == int(self.value) and abs(self.value) < 1e16:
            text = str(int(self.value))
        else:
            text = repr(self.value)
        if self.value < 0:  # negative literals only arise programmatically
            return f"({text})" if parent_prec > _PREC_ADD else text
        return text


@dataclass(frozen=True)
class Name(Expression):
    """A variable (``t``, ``k``) or named constant (``pi``, ``e``)."""

    name: str
    pos: int = field(default=0, compare=False)

    def eval(self, **bindings):
        if self.name in bindings:
            return bindings[self.name]
        if self.name in _CONSTANTS:
            return _CONSTANTS[self.name]
        raise EvalDomainError(f"unbound variable '{self.name}'")

    def variables(self):
        return frozenset([self.name]) if self.name in _VARIABLES else frozenset()

    def _render(self, parent_prec):
        return self.name


@dataclass(frozen=True)
class Unary(Expression):
    op: str  # only "-"
    operand: Expression
    pos: int = field(default=0, compare=False)

    def eval(self, **bindings):
        return -self.operand.eval(**bindings)

    def variables(self):
        return self.operand.variables()

    def _render(self, parent_prec):
        inner = self.operand._render(_PREC_UNARY)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC_UNARY else text


@dataclass(frozen=True)
class Binary(Expression):
    op: str  # + - * / ^
    left: Expression
    right: Expression
    pos: int = field(default=0, compare=False)

    def eval(self, **bindings):
        a = self.left.eval(**bindings)
        b = self.right.eval(**bindings)
        if self.op == "+":
            out = np.add(a, b)
        elif self.op == "-":
            out = np.subtract(a, b)
        elif self.op == "*":
            out = np.multiply(a, b)
        elif self.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalDomainError(f"division by zero (at offset {self.pos})")
            out = np.divide(a, b)
        elif self.op == "^":
            with np.errstate(invalid="ignore", over="ignore"):
                out = np.power(np.asarray(a, dtype=float), b)
        else:  # pragma: no cover - parser only emits the five ops
            raise EvalDomainError(f"unknown operator '{self.op}'")
        if not np.all(np.isfinite(out)):
            raise EvalDomainError(
                f"non-finite result from '{self.op}' (at offset {self.pos})"
            )
        return out if np.ndim(out) else float(out)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def _render(self, parent_prec):
        if self.op in "+-":
            prec, lp, rp = _PREC_ADD, _PREC_ADD, _PREC_ADD + 1
        elif self.op in "*/":
            prec, lp, rp = _PREC_MUL, _PREC_MUL, _PREC_MUL + 1
        else:  # ^ is right associative and binds tighter than unary minus
            prec, lp, rp = _PREC_POW, _PREC_POW + 1, _PREC_UNARY
        text = f"{self.left._render(lp)} {self.op} {self.right._render(rp)}"
        return f"({text})" if parent_prec > prec else text


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression
    pos: int = field(default=0, compare=False)

    def eval(self, **bindings):
        x = self.arg.eval(**bindings)
        if self.func == "sin":
            out = np.sin(x)
        elif self.func == "cos":
            out = np.cos(x)
        elif self.func == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(x)
        elif self.func == "ln":
            if np.any(np.asarray(x) <= 0):
                raise EvalDomainError(
                    f"ln of nonpositive value (at offset {self.pos})"
                )
            out = np.log(x)
        elif self.func == "abs":
            out = np.abs(x)
        elif self.func == "floor":
            out = np.floor(x)
        else:  # pragma: no cover
            raise EvalDomainError(f"unknown function '{self.func}'")
        if not np.all(np.isfinite(out)):
            raise EvalDomainError(
                f"non-finite result from '{self.func}' (at offset {self.pos})"
            )
        return out if np.ndim(out) else float(out)

    def variables(self):
        return self.arg.variables()

    def _render(self, parent_prec):
        return f"{self.func}({self.arg._render(0)})"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src):
    tokens = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {src[i]!r}", i)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), i))
        i = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def current(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.current
        if kind != "op" or text != op:
            raise ExpressionSyntaxError(f"expected '{op}'", pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, text, pos = self.current
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected trailing input {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.current[0] == "op" and self.current[1] in "+-":
            _, op, pos = self.advance()
            node = Binary(op, node, self.term(), pos=pos)
        return node

    def term(self):
        node = self.unary()
        while self.current[0] == "op" and self.current[1] in "*/":
            _, op, pos = self.advance()
            node = Binary(op, node, self.unary(), pos=pos)
        return node

    def unary(self):
        if self.current[0] == "op" and self.current[1] == "-":
            _, _, pos = self.advance()
            return Unary("-", self.unary(), pos=pos)
        return self.power()

    def power(self):
        node = self.atom()
        if self.current[0] == "op" and self.current[1] == "^":
            _, _, pos = self.advance()
            # right associative; exponent may carry its own sign
            node = Binary("^", node, self.unary(), pos=pos)
        return node

    def atom(self):
        kind, text, pos = self.current
        if kind == "num":
            self.advance()
            return Num(float(text), pos=pos)
        if kind == "name":
            self.advance()
            if self.current[0] == "op" and self.current[1] == "(":
                if text not in _FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function '{text}'", pos)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg, pos=pos)
            if text in _VARIABLES or text in _CONSTANTS:
                return Name(text, pos=pos)
            raise ExpressionSyntaxError(f"unknown name '{text}'", pos)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(
            f"expected a value, got {text!r}" if text else "unexpected end of input",
            pos,
        )


def parse(src: str) -> Expression:
    """Parse expression source into an AST.

    Raises :class:`~idepcag.errors.ExpressionSyntaxError` with the byte
    offset of the first problem.
    """
    if not isinstance(src, str) or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(src).parse()
