"""Property language: AST and recursive-descent parser.

Grammar (ASCII)::

    query   := P (>=|>|<=|<) c [ path ]  |  P=? [ path ]  |  R{"name"}=? [ C<=t ]
    path    := boolean / temporal combination of state formulas
               with X, F, G, F<=t, G<=t, G>t, U, U<=t
    state   := term (= != < <= > >=) term, joined by ! & | -> (or =>)

Variables are ``<name><neuron id>`` for ``y s p aref rref np``; other
identifiers (``RRP``, ``threshold5``, ...) are constants resolved per neuron.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

VAR_NAMES = ("aref", "rref", "np", "s", "y", "p")
_VAR_RE = re.compile(r"^(aref|rref|np|s|y|p)(\d+)$")


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class FragmentUnsupported(ValueError):
    pass


# -- terms and state formulas -------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction

    def __str__(self):
        v = self.value
        return str(v.numerator) if v.denominator == 1 else str(float(v))


@dataclass(frozen=True)
class Var:
    name: str
    neuron: int

    def __str__(self):
        return f"{self.name}{self.neuron}"


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Cmp:
    op: str
    left: "Term"
    right: "Term"

    def __str__(self):
        return f"{self.left}{self.op}{self.right}"


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return f"!({self.arg})"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) & ({self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) | ({self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) -> ({self.right})"


# -- path operators -------------------------------------------------------------

@dataclass(frozen=True)
class Next:
    arg: "Formula"

    def __str__(self):
        return f"X ({self.arg})"


@dataclass(frozen=True)
class Finally:
    arg: "Formula"
    bound: Optional[int] = None

    def __str__(self):
        b = "" if self.bound is None else f"<={self.bound}"
        return f"F{b} ({self.arg})"


@dataclass(frozen=True)
class Globally:
    arg: "Formula"
    bound: Optional[int] = None

    def __str__(self):
        b = "" if self.bound is None else f"<={self.bound}"
        return f"G{b} ({self.arg})"


@dataclass(frozen=True)
class GloballyAfter:
    """Holds when ``arg`` is true at every time index strictly greater than ``after``."""

    arg: "Formula"
    after: int

    def __str__(self):
        return f"G>{self.after} ({self.arg})"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    bound: Optional[int] = None

    def __str__(self):
        b = "" if self.bound is None else f"<={self.bound}"
        return f"({self.left}) U{b} ({self.right})"


# -- queries --------------------------------------------------------------------

@dataclass(frozen=True)
class Prob:
    op: str  # ">=", ">", "<=", "<" or "=?"
    bound: Optional[Fraction]
    path: "Formula"

    @property
    def is_query(self) -> bool:
        return self.op == "=?"

    def __str__(self):
        head = "P=?" if self.is_query else f"P{self.op}{Num(self.bound)}"
        return f"{head} [ {self.path} ]"


@dataclass(frozen=True)
class Reward:
    name: str
    bound: int

    def __str__(self):
        return f'R{{"{self.name}"}}=? [ C<={self.bound} ]'


Term = Union[Num, Var, Const]
Formula = Union[Cmp, BoolConst, Not, And, Or, Implies, Next, Finally, Globally, GloballyAfter, Until, Prob, Reward]

TEMPORAL = (Next, Finally, Globally, GloballyAfter, Until)
BOOLEAN = (Not, And, Or, Implies)


def children(f) -> tuple:
    if isinstance(f, (Not, Next, Finally, Globally, GloballyAfter)):
        return (f.arg,)
    if isinstance(f, (And, Or, Implies, Until)):
        return (f.left, f.right)
    if isinstance(f, Prob):
        return (f.path,)
    return ()


def walk(f):
    yield f
    for c in children(f):
        yield from walk(c)


def is_state_formula(f) -> bool:
    return not any(isinstance(g, TEMPORAL + (Prob, Reward)) for g in walk(f))


def neurons_referenced(f) -> set[int]:
    out = set()
    for g in walk(f):
        if isinstance(g, Cmp):
            out |= {t.neuron for t in (g.left, g.right) if isinstance(t, Var)}
    return out


# -- tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|\.\d+)
  | (?P<str>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=\?|<=|>=|!=|->|=>|[=<>!&|()\[\]{}\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise FormulaSyntaxError(f"{message}, found {found!r}", tok.pos, self.text)

    def accept(self, *texts: str) -> Optional[Token]:
        if self.tok.kind in ("op", "ident") and self.tok.text in texts:
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}")
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.error("expected a nonnegative integer bound")
        self.i += 1
        return int(t.text)

    # precedence: -> < | < & < U < unary < comparison
    def parse(self):
        f = self.implies()
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")
        return f

    def implies(self):
        left = self.disj()
        if self.accept("->", "=>"):
            return Implies(left, self.implies())
        return left

    def disj(self):
        f = self.conj()
        while self.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.until()
        while self.accept("&"):
            f = And(f, self.until())
        return f

    def until(self):
        left = self.unary()
        if self.accept("U"):
            bound = None
            if self.accept("<="):
                bound = self.integer()
            return Until(left, self.unary(), bound)
        return left

    def unary(self):
        if self.accept("!"):
            return Not(self.unary())
        if self.accept("X"):
            return Next(self.unary())
        if self.accept("F"):
            bound = self.integer() if self.accept("<=") else None
            return Finally(self.unary(), bound)
        if self.accept("G"):
            if self.accept("<="):
                bound = self.integer()
                return Globally(self.unary(), bound)
            if self.accept(">"):
                after = self.integer()
                return GloballyAfter(self.unary(), after)
            return Globally(self.unary())
        return self.comparison()

    def comparison(self):
        start = self.tok
        left = self.primary()
        if self.tok.kind == "op" and self.tok.text in _CMP_OPS:
            op = self.tok.text
            self.i += 1
            right = self.primary()
            if not all(isinstance(t, (Num, Var, Const)) for t in (left, right)):
                self.error("comparison needs numeric operands", start)
            return Cmp(op, left, right)
        if isinstance(left, (Num, Var, Const)):
            self.error("expected a comparison operator")
        return left

    def primary(self):
        t = self.tok
        if self.accept("("):
            f = self.implies()
            self.expect(")")
            return f
        if t.kind == "num":
            self.i += 1
            return Num(Fraction(t.text))
        if self.accept("-"):
            n = self.tok
            if n.kind != "num":
                self.error("expected a number after '-'")
            self.i += 1
            return Num(-Fraction(n.text))
        if t.kind == "ident":
            if t.text == "P":
                return self.prob()
            if t.text == "R":
                return self.reward()
            if t.text in ("true", "false"):
                self.i += 1
                return BoolConst(t.text == "true")
            if t.text in ("X", "F", "G", "U", "C"):
                self.error("misplaced operator")
            self.i += 1
            m = _VAR_RE.match(t.text)
            if m:
                return Var(m.group(1), int(m.group(2)))
            return Const(t.text)
        self.error("expected a formula")

    def prob(self):
        self.expect("P")
        if self.accept("=?"):
            op, bound = "=?", None
        else:
            op_tok = self.accept(">=", ">", "<=", "<")
            if op_tok is None:
                self.error("expected a probability bound or '=?'")
            num = self.tok
            if num.kind != "num":
                self.error("expected a probability")
            self.i += 1
            op, bound = op_tok.text, Fraction(num.text)
            if not 0 <= bound <= 1:
                self.error("probability bound outside [0, 1]", num)
        self.expect("[")
        path = self.implies()
        self.expect("]")
        return Prob(op, bound, path)

    def reward(self):
        self.expect("R")
        self.expect("{")
        name = self.tok
        if name.kind != "str":
            self.error("expected a quoted reward name")
        self.i += 1
        self.expect("}")
        self.expect("=?")
        self.expect("[")
        self.expect("C")
        self.expect("<=")
        bound = self.integer()
        self.expect("]")
        return Reward(name.text[1:-1], bound)


def parse_formula(text: str):
    """Parse a property; path operators are only accepted under ``P``."""
    f = _Parser(text).parse()
    _check_placement(f, text)
    return f


def _check_placement(f, text: str, under_p: bool = False):
    if isinstance(f, TEMPORAL) and not under_p:
        raise FormulaSyntaxError(f"path operator {type(f).__name__} outside P[...]", 0, text)
    if isinstance(f, (Prob, Reward)):
        if under_p:
            raise FormulaSyntaxError("nested probabilistic operator", 0, text)
        if isinstance(f, Prob):
            _check_placement(f.path, text, True)
        return
    for c in children(f):
        _check_placement(c, text, under_p)


def is_query(f) -> bool:
    """True for a formula with a numeric answer (``P=?`` or ``R=?``)."""
    return isinstance(f, Reward) or (isinstance(f, Prob) and f.is_query)
