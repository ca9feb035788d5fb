"""Path formulas on finite trace prefixes, for step-bounded properties."""
from __future__ import annotations

from fractions import Fraction

from .formula import (
    And,
    BoolConst,
    Finally,
    FragmentUnsupported,
    Globally,
    GloballyAfter,
    Implies,
    Next,
    Not,
    Or,
    Prob,
    Until,
    is_state_formula,
    parse_formula,
)
from .states import compile_state

NOT_CHECKABLE = "not statistically checkable; use exact checker"


def horizon(f) -> int:
    """Number of steps after the start that decide ``f``; raises for unbounded operators."""
    if is_state_formula(f):
        return 0
    if isinstance(f, Next):
        return 1 + horizon(f.arg)
    if isinstance(f, Not):
        return horizon(f.arg)
    if isinstance(f, (And, Or, Implies)):
        return max(horizon(f.left), horizon(f.right))
    if isinstance(f, (Finally, Globally)) and f.bound is not None:
        return f.bound + horizon(f.arg)
    if isinstance(f, Until) and f.bound is not None:
        return f.bound + max(horizon(f.left), horizon(f.right))
    if isinstance(f, (Finally, Globally, Until, GloballyAfter)):
        raise FragmentUnsupported(f"{f}: {NOT_CHECKABLE}")
    raise FragmentUnsupported(f"unsupported path formula {f}")


def path_body(prop):
    """The path formula of ``P..[ body ]`` (or a bare path formula)."""
    if isinstance(prop, str):
        prop = parse_formula(prop)
    if isinstance(prop, Prob):
        return prop.path
    return prop


class PrefixEvaluator:
    """Evaluates one path formula at position 0 of state sequences."""

    def __init__(self, f, spec):
        self.formula = f
        self.spec = spec
        self.horizon = horizon(f)
        self._preds: dict = {}

    def _pred(self, f):
        hit = self._preds.get(f)
        if hit is None:
            hit = self._preds[f] = compile_state(f, self.spec)
        return hit

    def __call__(self, states) -> bool:
        if len(states) <= self.horizon:
            raise ValueError(f"prefix of {len(states)} states is shorter than the horizon {self.horizon}")
        return self._eval(self.formula, states, 0)

    def _eval(self, f, seq, i: int) -> bool:
        if is_state_formula(f):
            return self._pred(f)(seq[i])
        if isinstance(f, Next):
            return self._eval(f.arg, seq, i + 1)
        if isinstance(f, Not):
            return not self._eval(f.arg, seq, i)
        if isinstance(f, And):
            return self._eval(f.left, seq, i) and self._eval(f.right, seq, i)
        if isinstance(f, Or):
            return self._eval(f.left, seq, i) or self._eval(f.right, seq, i)
        if isinstance(f, Implies):
            return (not self._eval(f.left, seq, i)) or self._eval(f.right, seq, i)
        if isinstance(f, Finally):
            return any(self._eval(f.arg, seq, i + k) for k in range(f.bound + 1))
        if isinstance(f, Globally):
            return all(self._eval(f.arg, seq, i + k) for k in range(f.bound + 1))
        if isinstance(f, Until):
            for k in range(f.bound + 1):
                if self._eval(f.right, seq, i + k):
                    return True
                if not self._eval(f.left, seq, i + k):
                    return False
            return False
        raise FragmentUnsupported(f"unsupported path formula {f}")


# -- exact probability by formula progression -----------------------------------------

_TRUE, _FALSE = BoolConst(True), BoolConst(False)


def _and(a, b):
    if a == _FALSE or b == _FALSE:
        return _FALSE
    if a == _TRUE:
        return b
    return a if b == _TRUE else And(a, b)


def _or(a, b):
    if a == _TRUE or b == _TRUE:
        return _TRUE
    if a == _FALSE:
        return b
    return a if b == _FALSE else Or(a, b)


def _not(a):
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    return Not(a)


def progress(f, index: int, sat):
    """What must hold from the next position on, given that the current state is ``index``."""
    if isinstance(f, BoolConst):
        return f
    if is_state_formula(f):
        return _TRUE if index in sat(f) else _FALSE
    if isinstance(f, Next):
        return f.arg
    if isinstance(f, Not):
        return _not(progress(f.arg, index, sat))
    if isinstance(f, And):
        return _and(progress(f.left, index, sat), progress(f.right, index, sat))
    if isinstance(f, Or):
        return _or(progress(f.left, index, sat), progress(f.right, index, sat))
    if isinstance(f, Implies):
        return _or(_not(progress(f.left, index, sat)), progress(f.right, index, sat))
    if isinstance(f, Finally):
        rest = Finally(f.arg, f.bound - 1) if f.bound else _FALSE
        return _or(progress(f.arg, index, sat), rest)
    if isinstance(f, Globally):
        rest = Globally(f.arg, f.bound - 1) if f.bound else _TRUE
        return _and(progress(f.arg, index, sat), rest)
    if isinstance(f, Until):
        rest = Until(f.left, f.right, f.bound - 1) if f.bound else _FALSE
        return _or(progress(f.right, index, sat), _and(progress(f.left, index, sat), rest))
    raise FragmentUnsupported(f"unsupported path formula {f}")


def bounded_probability(dtmc, f, sat) -> Fraction:
    """Exact probability of a finite-horizon path formula from the initial state.

    Each step rewrites the formula against the current state; the residual
    formulas are finite because every bound shrinks, so (state, residual)
    pairs are memoised.
    """
    horizon(f)
    memo: dict = {}
    rows = dtmc.transitions

    def value(index, g):
        key = (index, g)
        hit = memo.get(key)
        if hit is None:
            rest = progress(g, index, sat)
            if isinstance(rest, BoolConst):
                hit = Fraction(int(rest.value))
            else:
                hit = sum((q * value(j, rest) for j, q in rows[index]), Fraction(0))
            memo[key] = hit
        return hit

    return value(dtmc.initial, f)
