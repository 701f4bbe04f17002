"""Small expression language for scalar fields on a coordinate chart.

Provides parsing, IEEE-double evaluation, exact symbolic differentiation,
substitution, printing, and compilation to fast Python closures.  The grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' int)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base

with standard precedence, left associativity, and '^' binding tighter than
unary minus (so ``-x^2`` means ``-(x^2)``).  Known functions: sin, cos, exp,
ln, sqrt.  Power exponents are literal integers (positive or negative);
fractional powers route through exp/ln.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

__all__ = [
    "SourceSpan",
    "ParseError",
    "DomainError",
    "EvalFlags",
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "KNOWN_FUNCTIONS",
    "parse",
    "parse_vector",
    "evaluate",
    "differentiate",
    "substitute",
    "to_string",
    "compile_evaluator",
    "gradient_asts",
]

KNOWN_FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


# === Source positions and errors ===

@dataclass(frozen=True)
class SourceSpan:
    """Byte offsets (start, end) into a source string, start <= end."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span ({self.start}, {self.end})")


class ParseError(ValueError):
    """Syntax or name-resolution error, carrying the offending SourceSpan."""

    def __init__(self, message: str, span: SourceSpan, source: str = ""):
        self.span = span
        self.source = source
        super().__init__(f"{message} at {span.start}:{span.end}")
        self.message = message


class DomainError(ArithmeticError):
    """Evaluation left a function's domain (ln or sqrt of a negative value)."""


@dataclass
class EvalFlags:
    """Mutable record of non-fatal IEEE events during evaluation."""

    div_by_zero: bool = False
    overflow: bool = False


# === AST nodes (immutable; safe to share between evaluators) ===

class Expr:
    """Base class of expression nodes."""

    span: Optional[SourceSpan]

    def __str__(self) -> str:  # pragma: no cover - convenience
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Var(Expr):
    name: str
    index: int
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr
    span: Optional[SourceSpan] = None


# === Tokenizer ===

@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    start: int
    end: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.start, self.end)


_OPS = "+-*/^()"


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, n = 0, len(source)
    while pos < n:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < n and source[pos + 1].isdigit()):
            start = pos
            while pos < n and source[pos].isdigit():
                pos += 1
            if pos < n and source[pos] == ".":
                pos += 1
                while pos < n and source[pos].isdigit():
                    pos += 1
            if pos < n and source[pos] in "eE":
                mark = pos
                pos += 1
                if pos < n and source[pos] in "+-":
                    pos += 1
                if pos < n and source[pos].isdigit():
                    while pos < n and source[pos].isdigit():
                        pos += 1
                else:
                    pos = mark  # "2e" is the number 2 followed by ident "e"
            tokens.append(_Token("num", source[start:pos], start, pos))
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (source[pos].isalnum() or source[pos] == "_"):
                pos += 1
            tokens.append(_Token("ident", source[start:pos], start, pos))
            continue
        if ch in _OPS:
            tokens.append(_Token("op", ch, pos, pos + 1))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", SourceSpan(pos, pos + 1), source)
    tokens.append(_Token("eof", "", n, n))
    return tokens


# === Parser ===

class _Parser:
    def __init__(self, source: str, coords: Mapping[str, int],
                 params: Mapping[str, float]):
        self.source = source
        self.coords = coords
        self.params = params
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token) -> "ParseError":
        return ParseError(message, tok.span, self.source)

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise self.fail(f"unexpected token {tok.text!r}", tok)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            right = self.term()
            node = BinOp(op.text, node, right, _join(node.span, right.span))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance()
            right = self.factor()
            node = BinOp(op.text, node, right, _join(node.span, right.span))
        return node

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            arg = self.factor()  # recurse at factor level: '^' binds tighter
            return Neg(arg, _join(tok.span, arg.span))
        node = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            node = Pow(node, self.exponent(), node.span)
        return node

    def exponent(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.fail("exponent must be an integer literal", tok)
        self.advance()
        return sign * int(tok.text)

    def base(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text), tok.span)
        if tok.kind == "ident":
            name = tok.text
            if self.peek().kind == "op" and self.peek().text == "(":
                if name not in KNOWN_FUNCTIONS:
                    raise self.fail(f"unknown function {name!r}", tok)
                self.advance()
                arg = self.expr()
                close = self.peek()
                if not (close.kind == "op" and close.text == ")"):
                    raise self.fail("expected ')'", close)
                self.advance()
                return Call(name, arg, SourceSpan(tok.start, close.end))
            if name in self.coords:
                return Var(name, self.coords[name], tok.span)
            if name in self.params:
                return Num(float(self.params[name]), tok.span)
            if name in KNOWN_FUNCTIONS:
                raise self.fail(f"function {name!r} requires an argument list", tok)
            raise self.fail(f"unknown identifier {name!r}", tok)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            close = self.peek()
            if not (close.kind == "op" and close.text == ")"):
                raise self.fail("expected ')'", close)
            self.advance()
            return node
        if tok.kind == "op" and tok.text == "-":
            arg = self.base()
            return Neg(arg, _join(tok.span, arg.span))
        if tok.kind == "eof":
            raise ParseError("expected expression", tok.span, self.source)
        raise self.fail(f"expected expression, found {tok.text!r}", tok)


def _join(a: Optional[SourceSpan], b: Optional[SourceSpan]) -> Optional[SourceSpan]:
    if a is None or b is None:
        return None
    return SourceSpan(a.start, b.end)


def parse(source: str, coordinates: Sequence[str],
          parameters: Optional[Mapping[str, float]] = None) -> Expr:
    """Parse ``source`` over the named coordinates.

    ``parameters`` are bound as numeric literals at parse time; a name may not
    be both a coordinate and a parameter.
    """
    params = dict(parameters or {})
    coords = {name: i for i, name in enumerate(coordinates)}
    clash = set(coords) & set(params)
    if clash:
        raise ValueError(f"names are both coordinates and parameters: {sorted(clash)}")
    if not source or source.strip() == "":
        raise ParseError("empty expression", SourceSpan(0, len(source or "")), source or "")
    return _Parser(source, coords, params).parse()


def parse_vector(source: str, coordinates: Sequence[str],
                 parameters: Optional[Mapping[str, float]] = None) -> list[Expr]:
    """Parse a comma-separated list of expressions (commas never occur inside)."""
    parts = source.split(",")
    return [parse(part, coordinates, parameters) for part in parts]


# === Evaluation (tree walk and compiled closures share these helpers) ===

def _div(a: float, b: float, flags: Optional[EvalFlags]) -> float:
    if b == 0.0:
        if flags is not None:
            flags.div_by_zero = True
        if a == 0.0 or a != a:
            return math.nan
        return math.copysign(1.0, a) * math.copysign(1.0, b) * math.inf
    return a / b


def _ln(v: float, flags: Optional[EvalFlags]) -> float:
    if v < 0.0:
        raise DomainError(f"ln of negative value {v}")
    if v == 0.0:
        if flags is not None:
            flags.div_by_zero = True
        return -math.inf
    return math.log(v)


def _sqrt(v: float, flags: Optional[EvalFlags]) -> float:
    if v < 0.0:
        raise DomainError(f"sqrt of negative value {v}")
    return math.sqrt(v)


def _exp(v: float, flags: Optional[EvalFlags]) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        if flags is not None:
            flags.overflow = True
        return math.inf


def _ipow(v: float, k: int, flags: Optional[EvalFlags]) -> float:
    if k < 0:
        try:
            return _div(1.0, v ** (-k), flags)
        except OverflowError:
            if flags is not None:
                flags.overflow = True
            return 0.0
    try:
        return v ** k
    except OverflowError:
        if flags is not None:
            flags.overflow = True
        return math.copysign(1.0, v) ** k * math.inf


def evaluate(node: Expr, point: Sequence[float],
             flags: Optional[EvalFlags] = None) -> float:
    """IEEE-double evaluation of ``node`` at ``point``.

    Division by zero yields +/-inf (or nan) and sets ``flags.div_by_zero``;
    ln/sqrt of a negative argument raises DomainError.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(point[node.index])
    if isinstance(node, Neg):
        return -evaluate(node.arg, point, flags)
    if isinstance(node, BinOp):
        a = evaluate(node.left, point, flags)
        b = evaluate(node.right, point, flags)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return _div(a, b, flags)
    if isinstance(node, Pow):
        return _ipow(evaluate(node.base, point, flags), node.exponent, flags)
    if isinstance(node, Call):
        v = evaluate(node.arg, point, flags)
        if node.func == "sin":
            return math.sin(v)
        if node.func == "cos":
            return math.cos(v)
        if node.func == "exp":
            return _exp(v, flags)
        if node.func == "ln":
            return _ln(v, flags)
        return _sqrt(v, flags)
    raise TypeError(f"not an expression node: {node!r}")


# === Compilation to Python closures (same semantics as evaluate) ===

def _emit(node: Expr) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x[{node.index}]"
    if isinstance(node, Neg):
        return f"(-{_emit(node.arg)})"
    if isinstance(node, BinOp):
        left, right = _emit(node.left), _emit(node.right)
        if node.op == "/":
            return f"_div({left}, {right}, flags)"
        return f"({left} {node.op} {right})"
    if isinstance(node, Pow):
        return f"_ipow({_emit(node.base)}, {node.exponent}, flags)"
    if isinstance(node, Call):
        arg = _emit(node.arg)
        if node.func in ("ln", "sqrt", "exp"):
            return f"_{node.func}({arg}, flags)"
        return f"_m.{node.func}({arg})"
    raise TypeError(f"not an expression node: {node!r}")


_COMPILE_NS = {"_m": math, "_div": _div, "_ln": _ln, "_sqrt": _sqrt,
               "_exp": _exp, "_ipow": _ipow}


def _compile_body(body: str) -> Callable[..., float]:
    src = f"def _compiled(x, flags=None):\n    return {body}\n"
    namespace = dict(_COMPILE_NS)
    exec(compile(src, "<expr>", "exec"), namespace)
    return namespace["_compiled"]


def compile_evaluator(node: Expr) -> Callable[..., float]:
    """Compile ``node`` to a closure ``f(point, flags=None) -> float``."""
    return _compile_body(_emit(node))


def compile_vector_evaluator(nodes: Sequence[Expr]) -> Callable[..., tuple]:
    """Compile several expressions to one closure returning a tuple of floats."""
    body = "(" + ", ".join(_emit(n) for n in nodes) + ("," if len(nodes) == 1 else "") + ")"
    return _compile_body(body)


def compile_matrix_evaluator(rows: Sequence[Sequence[Expr]]) -> Callable[..., tuple]:
    """Compile a table of expressions to one closure returning nested tuples."""
    parts = []
    for row in rows:
        inner = ", ".join(_emit(n) for n in row) + ("," if len(row) == 1 else "")
        parts.append(f"({inner})")
    body = "(" + ", ".join(parts) + ("," if len(rows) == 1 else "") + ")"
    return _compile_body(body)


# === Smart constructors: constant folding and 0/1 identity elimination only ===

def _is_num(node: Expr, value: Optional[float] = None) -> bool:
    return isinstance(node, Num) and (value is None or node.value == value)


def _fold(value: float, fallback: Expr) -> Expr:
    return Num(value) if math.isfinite(value) else fallback


def c_add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return _fold(a.value + b.value, BinOp("+", a, b))
    return BinOp("+", a, b)


def c_sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return c_neg(b)
    if _is_num(a) and _is_num(b):
        return _fold(a.value - b.value, BinOp("-", a, b))
    return BinOp("-", a, b)


def c_mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return _fold(a.value * b.value, BinOp("*", a, b))
    return BinOp("*", a, b)


def c_div(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return _fold(a.value / b.value, BinOp("/", a, b))
    return BinOp("/", a, b)


def c_neg(a: Expr) -> Expr:
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def c_pow(base: Expr, k: int) -> Expr:
    if k == 0:
        return Num(1.0)
    if k == 1:
        return base
    if _is_num(base) and not (base.value == 0.0 and k < 0):
        return _fold(_ipow(base.value, k, None), Pow(base, k))
    return Pow(base, k)


def c_call(func: str, arg: Expr) -> Expr:
    return Call(func, arg)


# === Symbolic differentiation ===

def differentiate(node: Expr, variable: Union[int, str],
                  coordinates: Optional[Sequence[str]] = None) -> Expr:
    """Exact symbolic derivative of ``node`` with respect to one coordinate.

    ``variable`` is a coordinate index, or a name if ``coordinates`` is given.
    Results use only constant folding and 0/1 identity elimination.
    """
    if isinstance(variable, str):
        if coordinates is None:
            raise ValueError("differentiating by name requires the coordinate list")
        variable = list(coordinates).index(variable)
    return _diff(node, variable)


def _diff(node: Expr, i: int) -> Expr:
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.index == i else 0.0)
    if isinstance(node, Neg):
        return c_neg(_diff(node.arg, i))
    if isinstance(node, BinOp):
        du, dv = _diff(node.left, i), _diff(node.right, i)
        u, v = node.left, node.right
        if node.op == "+":
            return c_add(du, dv)
        if node.op == "-":
            return c_sub(du, dv)
        if node.op == "*":
            return c_add(c_mul(du, v), c_mul(u, dv))
        return c_div(c_sub(c_mul(du, v), c_mul(u, dv)), c_pow(v, 2))
    if isinstance(node, Pow):
        du = _diff(node.base, i)
        k = node.exponent
        return c_mul(c_mul(Num(float(k)), c_pow(node.base, k - 1)), du)
    if isinstance(node, Call):
        du = _diff(node.arg, i)
        u = node.arg
        if node.func == "sin":
            return c_mul(c_call("cos", u), du)
        if node.func == "cos":
            return c_neg(c_mul(c_call("sin", u), du))
        if node.func == "exp":
            return c_mul(c_call("exp", u), du)
        if node.func == "ln":
            return c_div(du, u)
        return c_div(du, c_mul(Num(2.0), c_call("sqrt", u)))
    raise TypeError(f"not an expression node: {node!r}")


def gradient_asts(node: Expr, dimension: int) -> list[Expr]:
    """All first partial derivatives of ``node`` as expression trees."""
    return [_diff(node, i) for i in range(dimension)]


# === Substitution (variable index -> replacement expression) ===

def substitute(node: Expr, replacements: Sequence[Expr]) -> Expr:
    """Replace each variable of index i by ``replacements[i]``, folding constants."""
    if isinstance(node, Num):
        return node
    if isinstance(node, Var):
        if node.index >= len(replacements):
            raise ValueError(f"no replacement for variable {node.name!r}")
        return replacements[node.index]
    if isinstance(node, Neg):
        return c_neg(substitute(node.arg, replacements))
    if isinstance(node, BinOp):
        a = substitute(node.left, replacements)
        b = substitute(node.right, replacements)
        table = {"+": c_add, "-": c_sub, "*": c_mul, "/": c_div}
        return table[node.op](a, b)
    if isinstance(node, Pow):
        return c_pow(substitute(node.base, replacements), node.exponent)
    if isinstance(node, Call):
        return c_call(node.func, substitute(node.arg, replacements))
    raise TypeError(f"not an expression node: {node!r}")


# === Printing (round-trips through parse up to evaluation) ===

def _prec(node: Expr) -> int:
    if isinstance(node, (Num, Var, Call)):
        return 5
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Neg):
        return 3
    return 1 if node.op in "+-" else 2


def _wrap(node: Expr, minimum: int) -> str:
    text = to_string(node)
    return f"({text})" if _prec(node) < minimum else text


def to_string(node: Expr) -> str:
    """Render ``node`` as grammar-conforming text."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    if isinstance(node, BinOp):
        prec = 1 if node.op in "+-" else 2
        left = _wrap(node.left, prec)
        right = _wrap(node.right, prec + 1)
        return f"{left} {node.op} {right}" if prec == 1 else f"{left}{node.op}{right}"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, 5)}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")
