"""Compile state formulas into predicates over network states."""
from __future__ import annotations

import operator
import re
from fractions import Fraction
from typing import Callable

from ..network import NetworkSpec, NetworkState, variable_value
from .formula import And, BoolConst, Cmp, Const, Implies, Not, Num, Or, Var, is_state_formula

_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

_SUFFIXED = re.compile(r"^(threshold)_(\d+)_(\d+)$|^([A-Za-z]+(?:_[a-z]+)?)_(\d+)$")


class UnknownName(ValueError):
    pass


def threshold_levels(spec: NetworkSpec, neuron_id: int) -> list[int]:
    """Potential levels ``threshold0 .. threshold2k``; ``threshold<k>`` is the firing threshold."""
    params = spec.params(neuron_id)
    ls = params.table.boundaries
    offsets = [-b for b in reversed(ls)] + [0] + list(ls)
    return [params.tau + d for d in offsets]


def resolve_constant(name: str, neuron_id: int | None, spec: NetworkSpec) -> Fraction:
    m = _SUFFIXED.match(name)
    if m:
        if m.group(1):
            neuron_id, name = int(m.group(2)), f"threshold{m.group(3)}"
        else:
            neuron_id, name = int(m.group(5)), m.group(4)
    if neuron_id is None:
        raise UnknownName(f"constant {name!r} needs a neuron context (compare it with a variable)")
    if neuron_id not in spec.index_of:
        raise UnknownName(f"unknown neuron {neuron_id}")
    params = spec.params(neuron_id)
    simple = {
        "ARP": params.arp,
        "RRP": params.rrp,
        "tau": params.tau,
        "threshold": params.tau,
        "P_rest": params.p_rest,
        "P_min": params.p_min,
        "P_max": params.p_max,
        "MIN": params.p_min,
        "MAX": params.p_max,
        "alpha": params.alpha,
        "r": params.r,
    }
    if name in simple:
        return Fraction(simple[name])
    m = re.fullmatch(r"threshold(\d+)", name)
    if m:
        levels = threshold_levels(spec, neuron_id)
        j = int(m.group(1))
        if j >= len(levels):
            raise UnknownName(f"{name} out of range (neuron {neuron_id} has threshold0..threshold{len(levels) - 1})")
        return Fraction(levels[j])
    raise UnknownName(f"unknown constant {name!r}")


def _term(term, context: int | None, spec: NetworkSpec):
    if isinstance(term, Num):
        v = term.value
        return lambda st: v
    if isinstance(term, Var):
        if term.neuron not in spec.index_of:
            raise UnknownName(f"unknown neuron {term.neuron} in {term}")
        name, nid = term.name, term.neuron
        return lambda st: variable_value(spec, st, name, nid)
    if isinstance(term, Const):
        v = resolve_constant(term.name, context, spec)
        return lambda st: v
    raise TypeError(f"not a term: {term!r}")


def compile_state(f, spec: NetworkSpec) -> Callable[[NetworkState], bool]:
    if not is_state_formula(f):
        raise ValueError(f"not a state formula: {f}")
    if isinstance(f, BoolConst):
        v = f.value
        return lambda st: v
    if isinstance(f, Cmp):
        context = next((t.neuron for t in (f.left, f.right) if isinstance(t, Var)), None)
        left, right, op = _term(f.left, context, spec), _term(f.right, context, spec), _OPS[f.op]
        return lambda st: op(left(st), right(st))
    if isinstance(f, Not):
        a = compile_state(f.arg, spec)
        return lambda st: not a(st)
    a, b = compile_state(f.left, spec), compile_state(f.right, spec)
    if isinstance(f, And):
        return lambda st: a(st) and b(st)
    if isinstance(f, Or):
        return lambda st: a(st) or b(st)
    if isinstance(f, Implies):
        return lambda st: (not a(st)) or b(st)
    raise TypeError(f"unexpected node {f!r}")
