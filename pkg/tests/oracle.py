"""Brute-force reference: enumerate every branch sequence from the initial state.

Deliberately naive and independent of the DTMC builder and the checker: no
state deduplication, no graph algorithms, and its own formula evaluator.
"""
from fractions import Fraction

from snnverif.network import initial_state, network_branches, weighted_input
from snnverif.neuron import integrate
from snnverif.pctl.formula import (
    And,
    BoolConst,
    Cmp,
    Const,
    Finally,
    Globally,
    Implies,
    Next,
    Not,
    Num,
    Or,
    Until,
    Var,
)
from snnverif.pctl.states import resolve_constant


def paths(spec, length):
    """Yield ``(probability, [state_0, ..., state_length])`` for every branch sequence."""
    def rec(prefix, prob):
        if len(prefix) == length + 1:
            yield prob, prefix
            return
        for q, nxt in network_branches(prefix[-1], spec):
            yield from rec(prefix + [nxt], prob * q)

    yield from rec([initial_state(spec)], Fraction(1))


def _value(spec, state, term, context):
    if isinstance(term, Num):
        return term.value
    if isinstance(term, Const):
        return resolve_constant(term.name, context, spec)
    ns = state.neurons[spec.neuron_ids.index(term.neuron)]
    if term.name == "np":
        if ns.s == 1:
            return 0
        return integrate(ns, weighted_input(term.neuron, state, spec), spec.params(term.neuron))
    return {"s": ns.s, "y": ns.y, "p": ns.p, "aref": ns.aref, "rref": ns.rref}[term.name]


def holds(spec, f, seq, i=0):
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Cmp):
        ctx = next((t.neuron for t in (f.left, f.right) if isinstance(t, Var)), None)
        a, b = _value(spec, seq[i], f.left, ctx), _value(spec, seq[i], f.right, ctx)
        return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[f.op]
    if isinstance(f, Not):
        return not holds(spec, f.arg, seq, i)
    if isinstance(f, And):
        return holds(spec, f.left, seq, i) and holds(spec, f.right, seq, i)
    if isinstance(f, Or):
        return holds(spec, f.left, seq, i) or holds(spec, f.right, seq, i)
    if isinstance(f, Implies):
        return not holds(spec, f.left, seq, i) or holds(spec, f.right, seq, i)
    if isinstance(f, Next):
        return holds(spec, f.arg, seq, i + 1)
    if isinstance(f, Finally):
        return any(holds(spec, f.arg, seq, i + k) for k in range(f.bound + 1))
    if isinstance(f, Globally):
        return all(holds(spec, f.arg, seq, i + k) for k in range(f.bound + 1))
    if isinstance(f, Until):
        for k in range(f.bound + 1):
            if holds(spec, f.right, seq, i + k):
                return True
            if not holds(spec, f.left, seq, i + k):
                return False
        return False
    raise TypeError(f"oracle cannot evaluate {f}")


def probability(spec, path_formula, length):
    return sum((q for q, seq in paths(spec, length) if holds(spec, path_formula, seq)), Fraction(0))


def distribution(spec, t):
    """Exact distribution over states at step t."""
    out = {}
    for q, seq in paths(spec, t):
        out[seq[-1]] = out.get(seq[-1], Fraction(0)) + q
    return out
