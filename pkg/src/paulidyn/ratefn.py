"""A small expression language for time-dependent decoherence rates.

Grammar (EBNF; also documented in the README):

    expr    := term { ("+" | "-") term } ;
    term    := factor { ("*" | "/") factor } ;
    factor  := unary { "^" unary } ;            (* left-associative power *)
    unary   := "-" unary | atom ;
    atom    := NUMBER | "t" | NAME "(" expr [ "," expr ] ")" | "(" expr ")" ;
    NAME    := "tanh" | "exp" | "ln" | "cosh" | "sinh" | "pow" ;

Precedence, tightest first: unary minus, "^", "*" and "/", "+" and "-";
so "-t^2" means "(-t)^2".  The only variable is t.  Domain violations
(ln of a nonpositive value, division by zero, overflow) raise
:class:`EvaluationError`; evaluation never returns NaN silently.

Bundled presets cover the standard experiment families: the eternally
negative qubit rate set, its d-level generalization, the averaged-dephasing
mixture of d semigroups, and plain constant-rate semigroups.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvaluationError, InvalidInputError, ParseError, QuadratureError

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_UNARY_FUNCS = {
    "tanh": math.tanh,
    "exp": math.exp,
    "cosh": math.cosh,
    "sinh": math.sinh,
}
_FUNC_ARITY = {"tanh": 1, "exp": 1, "ln": 1, "cosh": 1, "sinh": 1, "pow": 2}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str) -> list:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(source) - len(stripped)
            raise ParseError(f"unexpected character {source[bad_at]!r}", bad_at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, symbol: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != symbol:
            raise ParseError(f"expected {symbol!r}", pos)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r} after expression", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text == "^":
                self.take()
                node = BinOp("^", node, self.unary())
            else:
                return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "t":
                return Var()
            if text in _FUNC_ARITY:
                self.expect_op("(")
                args = [self.expr()]
                nk, nt, npos = self.peek()
                if nk == "op" and nt == ",":
                    self.take()
                    args.append(self.expr())
                self.expect_op(")")
                if len(args) != _FUNC_ARITY[text]:
                    raise ParseError(
                        f"{text} takes {_FUNC_ARITY[text]} argument(s), got {len(args)}", pos
                    )
                return Call(text, tuple(args))
            raise ParseError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {text!r}" if text else "unexpected end of input", pos)


# ---------------------------------------------------------------------------
# Printing (precedence-aware, reparses to the same tree)
# ---------------------------------------------------------------------------

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_POW, _LEVEL_UNARY, _LEVEL_ATOM = 1, 2, 3, 4, 5
_OP_LEVEL = {"+": _LEVEL_ADD, "-": _LEVEL_ADD, "*": _LEVEL_MUL, "/": _LEVEL_MUL, "^": _LEVEL_POW}


def _node_level(node) -> int:
    if isinstance(node, BinOp):
        return _OP_LEVEL[node.op]
    if isinstance(node, Neg):
        return _LEVEL_UNARY
    return _LEVEL_ATOM


def _emit(node, min_level: int) -> str:
    if isinstance(node, Num):
        text = repr(node.value)
    elif isinstance(node, Var):
        text = "t"
    elif isinstance(node, Neg):
        text = "-" + _emit(node.operand, _LEVEL_UNARY)
    elif isinstance(node, Call):
        text = node.name + "(" + ", ".join(_emit(a, _LEVEL_ADD) for a in node.args) + ")"
    elif isinstance(node, BinOp):
        lvl = _OP_LEVEL[node.op]
        # left-associative: the right operand must bind strictly tighter
        text = _emit(node.left, lvl) + f" {node.op} " + _emit(node.right, lvl + 1)
    else:  # pragma: no cover
        raise TypeError(f"not an AST node: {node!r}")
    if _node_level(node) < min_level:
        return "(" + text + ")"
    return text


def to_source(node) -> str:
    return _emit(node, _LEVEL_ADD)


# ---------------------------------------------------------------------------
# Public expression object, evaluation, integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateExpr:
    source: str
    root: object

    @property
    def canonical_source(self) -> str:
        return to_source(self.root)


def parse(source: str) -> RateExpr:
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression", 0)
    return RateExpr(source=source, root=_Parser(source).parse())


def _eval_node(node, t: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval_node(node.operand, t)
    if isinstance(node, Call):
        args = [_eval_node(a, t) for a in node.args]
        try:
            if node.name == "ln":
                if args[0] <= 0.0:
                    raise EvaluationError(f"ln of nonpositive value {args[0]!r} at t={t!r}")
                return math.log(args[0])
            if node.name == "pow":
                return math.pow(args[0], args[1])
            return _UNARY_FUNCS[node.name](args[0])
        except OverflowError as exc:
            raise EvaluationError(f"overflow in {node.name} at t={t!r}") from exc
        except ValueError as exc:
            raise EvaluationError(f"domain error in {node.name} at t={t!r}: {exc}") from exc
    if isinstance(node, BinOp):
        a = _eval_node(node.left, t)
        b = _eval_node(node.right, t)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                if b == 0.0:
                    raise EvaluationError(f"division by zero at t={t!r}")
                return a / b
            return math.pow(a, b)
        except OverflowError as exc:
            raise EvaluationError(f"overflow in {node.op!r} at t={t!r}") from exc
        except ValueError as exc:
            raise EvaluationError(f"domain error in {node.op!r} at t={t!r}: {exc}") from exc
    raise TypeError(f"not an AST node: {node!r}")  # pragma: no cover


def evaluate(expr: RateExpr, t: float) -> float:
    """Evaluate at time ``t``.  Raises :class:`EvaluationError` on any domain
    violation or non-finite result."""
    if not math.isfinite(t):
        raise InvalidInputError(f"t must be finite, got {t!r}")
    value = _eval_node(expr.root, float(t))
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite value {value!r} at t={t!r}")
    return value


def _adaptive_simpson(f, a, fa, b, fb, whole, fm, tol, depth, budget):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(
            f"adaptive Simpson failed to converge on [{a!r}, {b!r}] (residual {abs(delta):.3e})"
        )
    budget[0] -= 1
    if budget[0] <= 0:
        raise QuadratureError(
            f"adaptive Simpson exceeded its subdivision budget near [{a!r}, {b!r}]"
        )
    half_tol = 0.5 * tol
    return _adaptive_simpson(
        f, a, fa, m, fm, left, flm, half_tol, depth - 1, budget
    ) + _adaptive_simpson(f, m, fm, b, fb, right, frm, half_tol, depth - 1, budget)


def integrate(expr: RateExpr, t0: float, t1: float, tol: float = 1e-10) -> float:
    """Integral of the expression over [t0, t1] by adaptive Simpson bisection.

    The estimated absolute error is kept below ``tol``.  Raises
    :class:`QuadratureError` when the recursion cannot reach the tolerance.
    """
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise InvalidInputError("integration limits must be finite")
    if t1 < t0:
        raise InvalidInputError(f"t1 must be >= t0, got [{t0!r}, {t1!r}]")
    if t1 == t0:
        return 0.0
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")

    def f(u: float) -> float:
        return evaluate(expr, u)

    fa, fb = f(t0), f(t1)
    fm = f(0.5 * (t0 + t1))
    whole = (t1 - t0) / 6.0 * (fa + 4.0 * fm + fb)
    # depth bounds a single singular path; the budget bounds the whole tree
    return _adaptive_simpson(f, t0, fa, t1, fb, whole, fm, tol, depth=48, budget=[100_000])


# ---------------------------------------------------------------------------
# Rate sets and presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateSet:
    """The d+1 scalar rate functions driving a d-dimensional evolution."""

    dim: int
    rates: tuple  # of RateExpr, length d+1

    def sample(self, t: float) -> list:
        return [evaluate(r, t) for r in self.rates]


def rate_set(dim: int, sources) -> RateSet:
    exprs = tuple(parse(s) for s in sources)
    if len(exprs) != dim + 1:
        raise InvalidInputError(f"need {dim + 1} rate expressions for d={dim}, got {len(exprs)}")
    return RateSet(dim=dim, rates=exprs)


def _fmt(x: float) -> str:
    return repr(float(x))


def preset_rates(name: str, d: int | None = None, constants=None) -> RateSet:
    """Named rate-set presets.

    - ``eternal-qubit``: (1, 1, -tanh t) for d=2.
    - ``eternal-general``: two rates 1 + ((d-2)/d) tanh t, the remaining d-1
      rates -(2/d) tanh t.
    - ``avg-decoherence``: d unit rates plus the negative companion rate
      -(d-1)(e^{dt}-1)/(e^{dt}+d-1) of the uniform d-semigroup mixture.
    - ``semigroup``: the given constants c_1..c_{d+1}.
    """
    if name == "eternal-qubit":
        if d not in (None, 2):
            raise InvalidInputError("eternal-qubit is a d=2 preset; use eternal-general for d>2")
        return rate_set(2, ["1", "1", "-tanh(t)"])
    if name == "eternal-general":
        if d is None:
            raise InvalidInputError("eternal-general requires d")
        _require_preset_dim(d)
        lead = f"1 + (({d}-2)/{d})*tanh(t)"
        tail = f"-(2/{d})*tanh(t)"
        return rate_set(d, [lead, lead] + [tail] * (d - 1))
    if name == "avg-decoherence":
        if d is None:
            raise InvalidInputError("avg-decoherence requires d")
        _require_preset_dim(d)
        last = f"-({d}-1)*(exp({d}*t)-1)/(exp({d}*t)+{d}-1)"
        return rate_set(d, ["1"] * d + [last])
    if name == "semigroup":
        if constants is None:
            raise InvalidInputError("semigroup requires the constants c_1..c_{d+1}")
        values = [float(c) for c in constants]
        dim = len(values) - 1
        if d is not None and d != dim:
            raise InvalidInputError(f"semigroup got {len(values)} constants but d={d}")
        _require_preset_dim(dim)
        return rate_set(dim, [_fmt(c) for c in values])
    raise InvalidInputError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def _require_preset_dim(d: int):
    if not isinstance(d, (int,)) or d < 2:
        raise InvalidInputError(f"preset dimension must be an integer >= 2, got {d!r}")


PRESET_NAMES = ("eternal-qubit", "eternal-general", "avg-decoherence", "semigroup")

PRESET_SUMMARIES = {
    "eternal-qubit": "d=2; rates (1, 1, -tanh t): one rate forever negative, map stays legitimate",
    "eternal-general": "requires --d; two rates 1+((d-2)/d)tanh t, d-1 rates -(2/d)tanh t",
    "avg-decoherence": "requires --d; d unit rates plus -(d-1)(e^{dt}-1)/(e^{dt}+d-1)",
    "semigroup": "requires --c c1,...,c_{d+1}; constant rates (time-independent generator)",
}
