"""Exact model checking of the property fragment over a built DTMC."""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .. import graphs
from ..dtmc import Dtmc, transient_distribution
from .formula import (
    And,
    Finally,
    FragmentUnsupported,
    Globally,
    GloballyAfter,
    Implies,
    Next,
    Not,
    Or,
    Prob,
    Reward,
    Until,
    is_state_formula,
    neurons_referenced,
    parse_formula,
)
from .finite import bounded_probability, horizon
from .product import product_probability
from .solve import bounded_until, reach_probabilities
from .states import UnknownName, compile_state

GRAPH, BOUNDED, LINEAR, BSCC = "graph-qualitative", "bounded-iteration", "linear-solve", "bscc"


class UnknownReward(KeyError):
    pass


@dataclass
class CheckResult:
    kind: str  # "verdict", "probability" or "reward"
    value: Union[bool, Fraction, float]
    elapsed_ms: float
    method: str
    exact: bool = True
    note: str = ""

    def record(self, prop: str) -> dict:
        """JSON-ready record ``{property, kind, value, method, elapsed_ms}`` (plus ``exact``)."""
        value = self.value if isinstance(self.value, bool) else float(self.value)
        rec = {
            "property": prop,
            "kind": self.kind,
            "value": value,
            "method": self.method,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }
        if isinstance(self.value, Fraction):
            rec["exact"] = str(self.value)
        if self.note:
            rec["note"] = self.note
        return rec


class _Sat:
    """State sets of state formulas, memoised per DTMC."""

    def __init__(self, dtmc: Dtmc):
        self.dtmc = dtmc
        self._cache: dict = {}

    def __call__(self, f) -> frozenset[int]:
        hit = self._cache.get(f)
        if hit is None:
            pred = compile_state(f, self.dtmc.spec)
            hit = self._cache[f] = frozenset(i for i, st in enumerate(self.dtmc.states) if pred(st))
        return hit


def _sat_of(dtmc: Dtmc) -> _Sat:
    sat = getattr(dtmc, "_sat", None)
    if sat is None:
        sat = _Sat(dtmc)
        dtmc._sat = sat  # type: ignore[attr-defined]
    return sat


def check(dtmc: Dtmc, formula) -> CheckResult:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    unknown = neurons_referenced(formula) - set(dtmc.spec.index_of)
    if unknown:
        raise UnknownName(f"formula references unknown neuron(s) {sorted(unknown)}")
    start = time.perf_counter()
    if isinstance(formula, Reward):
        value = expected_cumulative_reward(dtmc, formula.name, formula.bound)
        result = CheckResult("reward", value, 0.0, BOUNDED)
    elif isinstance(formula, Prob) and formula.is_query:
        value, method, exact, note = _probability(dtmc, formula.path)
        result = CheckResult("probability", value, 0.0, method, exact, note)
    else:
        verdict, method, exact, note = _verdict(dtmc, formula)
        result = CheckResult("verdict", verdict, 0.0, method, exact, note)
    result.elapsed_ms = (time.perf_counter() - start) * 1000
    return result


def _verdict(dtmc: Dtmc, f):
    if isinstance(f, Prob):
        if f.is_query:
            raise FragmentUnsupported("P=? cannot appear inside a boolean combination")
        if f.op == ">=" and f.bound == 1 and isinstance(f.path, GloballyAfter) and is_state_formula(f.path.arg):
            return _globally_after_qualitative(dtmc, f.path), GRAPH, True, ""
        value, method, exact, note = _probability(dtmc, f.path)
        return _compare(value, f.op, f.bound), method, exact, note
    if isinstance(f, Reward):
        raise FragmentUnsupported("R=? cannot appear inside a boolean combination")
    if is_state_formula(f):
        return dtmc.initial in _sat_of(dtmc)(f), GRAPH, True, ""
    if isinstance(f, Not):
        v, m, e, n = _verdict(dtmc, f.arg)
        return not v, m, e, n
    if isinstance(f, (And, Or, Implies)):
        a, ma, ea, _ = _verdict(dtmc, f.left)
        b, mb, eb, _ = _verdict(dtmc, f.right)
        if isinstance(f, And):
            v = a and b
        elif isinstance(f, Or):
            v = a or b
        else:
            v = (not a) or b
        return v, ma if ma == mb else f"{ma}+{mb}", ea and eb, ""
    raise FragmentUnsupported(f"unsupported top-level formula {f}")


def _compare(value, op: str, bound: Fraction) -> bool:
    return {
        ">=": value >= bound,
        ">": value > bound,
        "<=": value <= bound,
        "<": value < bound,
    }[op]


def _probability(dtmc: Dtmc, path):
    """(value, method, exact, note) for a path formula from the initial state."""
    sat = _sat_of(dtmc)
    init = dtmc.initial
    rows = dtmc.transitions

    if is_state_formula(path):
        return Fraction(int(init in sat(path))), GRAPH, True, ""

    if isinstance(path, Next) and is_state_formula(path.arg):
        target = sat(path.arg)
        return sum((q for j, q in rows[init] if j in target), Fraction(0)), BOUNDED, True, ""

    if isinstance(path, Implies) and is_state_formula(path.left) and isinstance(path.right, Next) \
            and is_state_formula(path.right.arg):
        return _conditional_next(dtmc, sat(path.left), sat(path.right.arg))

    if isinstance(path, (Finally, Until)):
        if isinstance(path, Finally):
            left, right = None, path.arg
        else:
            left, right = path.left, path.right
        if (left is None or is_state_formula(left)) and is_state_formula(right):
            allowed = None if left is None else set(sat(left))
            targets = set(sat(right))
            if path.bound is not None:
                return bounded_until(rows, targets, allowed, path.bound)[init], BOUNDED, True, ""
            res = reach_probabilities(rows, targets, allowed)
            return res.values[init], GRAPH if res.qualitative_only else (LINEAR if res.exact else BOUNDED), \
                res.exact, "" if res.exact else "floating-point value iteration"

    if isinstance(path, Globally) and is_state_formula(path.arg):
        value, method, exact, note = _probability(dtmc, Finally(Not(path.arg), path.bound))
        return 1 - value, method, exact, note

    if isinstance(path, GloballyAfter) and is_state_formula(path.arg):
        stay = _prob_globally(dtmc, path.arg)
        dist = transient_distribution(dtmc, path.after + 1)
        value = sum((m * stay.values[s] for s, m in enumerate(dist) if m), Fraction(0))
        return value, LINEAR if not stay.qualitative_only else GRAPH, stay.exact, ""

    try:
        value, exact, note = product_probability(dtmc, path, sat)
    except FragmentUnsupported:
        horizon(path)  # re-raises for unbounded nestings
        return bounded_probability(dtmc, path, sat), BOUNDED, True, ""
    return value, BSCC, exact, note


def _prob_globally(dtmc: Dtmc, arg):
    bad = set(range(len(dtmc))) - set(_sat_of(dtmc)(arg))
    res = reach_probabilities(dtmc.transitions, bad)
    res.values = [1 - v for v in res.values]
    return res


def _conditional_next(dtmc: Dtmc, antecedent: frozenset[int], target: frozenset[int]):
    """One-step probability of ``target`` from every reachable antecedent state; the minimum is reported."""
    probs = [
        sum((q for j, q in dtmc.transitions[s] if j in target), Fraction(0))
        for s in sorted(antecedent)
    ]
    if not probs:
        return Fraction(1), BOUNDED, True, "no reachable state satisfies the antecedent"
    lo, hi = min(probs), max(probs)
    note = f"conditional over {len(probs)} antecedent state(s)"
    if lo != hi:
        note += f"; one-step values range over [{lo}, {hi}], minimum reported"
    return lo, BOUNDED, True, note


def _globally_after_qualitative(dtmc: Dtmc, path: GloballyAfter) -> bool:
    """Every state occupied at time after+1 keeps its whole forward closure inside the formula."""
    succ = dtmc.successors()
    layer = {dtmc.initial}
    for _ in range(path.after + 1):
        layer = {j for v in layer for j in succ[v]}
    closure = graphs.forward_reachable(succ, layer)
    return closure <= _sat_of(dtmc)(path.arg)


def expected_cumulative_reward(dtmc: Dtmc, reward_name: str, t: int) -> Fraction:
    """Sum over k = 0..t of the expected state reward at step k."""
    if reward_name not in dtmc.rewards:
        raise UnknownReward(f"unknown reward {reward_name!r}; available: {sorted(dtmc.rewards)}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    reward = dtmc.rewards[reward_name]
    dist = [Fraction(0)] * len(dtmc)
    dist[dtmc.initial] = Fraction(1)
    total = Fraction(0)
    for k in range(t + 1):
        total += sum((m * reward[s] for s, m in enumerate(dist) if m and reward[s]), Fraction(0))
        if k < t:
            nxt = [Fraction(0)] * len(dist)
            for s, m in enumerate(dist):
                if m:
                    for j, q in dtmc.transitions[s]:
                        nxt[j] += m * q
            dist = nxt
    return total


def check_text(dtmc: Dtmc, text: str) -> dict:
    return check(dtmc, parse_formula(text)).record(text)


__all__ = [
    "CheckResult",
    "UnknownReward",
    "check",
    "check_text",
    "expected_cumulative_reward",
]


