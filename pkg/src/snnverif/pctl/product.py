"""Boolean combinations of temporal operators via a monitor product.

A path formula is rewritten into a Boolean skeleton over *atoms*.  Each atom
applies one temporal operator (``F G U``, their step-bounded forms, ``G>t``,
``FG`` or ``GF``) to *lookahead* formulas: state formulas possibly under
``X``.  A lookahead formula of depth ``d`` is evaluated at position ``i`` once
states ``i..i+d`` are known, so the product keeps a sliding window of the
last ``d+1`` chain states plus one small deterministic monitor per atom.

Monitor states only move towards a decision, so they are constant on every
bottom SCC of the product; ``FG``/``GF`` are read off the bottom SCC itself
(every state of a bottom SCC is visited infinitely often almost surely).
Once the skeleton is decided the product state collapses into an accept or
reject sink, which keeps the product small.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .. import graphs
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
    Until,
    is_state_formula,
)
from .solve import reach_probabilities

PENDING = "pending"
OK = "ok"


@dataclass(frozen=True, eq=False)
class Atom:
    kind: str
    args: tuple
    bound: Optional[int] = None


def is_lookahead(f) -> bool:
    if is_state_formula(f):
        return True
    if isinstance(f, Next):
        return is_lookahead(f.arg)
    if isinstance(f, Not):
        return is_lookahead(f.arg)
    if isinstance(f, (And, Or, Implies)):
        return is_lookahead(f.left) and is_lookahead(f.right)
    return False


def depth(f) -> int:
    if is_state_formula(f):
        return 0
    if isinstance(f, Next):
        return 1 + depth(f.arg)
    if isinstance(f, Not):
        return depth(f.arg)
    return max(depth(f.left), depth(f.right))


def _conjuncts(f):
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _conj(parts):
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _eventually_always(body):
    """FG(body) for body a conjunction of lookahead formulas and F/GF of lookahead formulas."""
    steady, recurring = [], []
    for part in _conjuncts(body):
        if is_lookahead(part):
            steady.append(part)
        elif isinstance(part, Finally) and part.bound is None and is_lookahead(part.arg):
            recurring.append(part.arg)
        elif isinstance(part, Globally) and part.bound is None and isinstance(part.arg, Finally) \
                and part.arg.bound is None and is_lookahead(part.arg.arg):
            recurring.append(part.arg.arg)
        else:
            raise FragmentUnsupported(f"unsupported operand under F G: {part}")
    atoms = []
    if steady:
        atoms.append(Atom("FG", (_conj(steady),)))
    atoms += [Atom("GF", (r,)) for r in recurring]
    return _conj(atoms)


def normalize(f):
    """Boolean skeleton over :class:`Atom` leaves; raises FragmentUnsupported outside the fragment."""
    if is_lookahead(f):
        return Atom("init", (f,))
    if isinstance(f, Not):
        return Not(normalize(f.arg))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(normalize(f.left), normalize(f.right))
    if isinstance(f, Finally):
        arg = f.arg
        if is_lookahead(arg):
            return Atom("F", (arg,), f.bound)
        if f.bound is None:
            if isinstance(arg, Globally) and arg.bound is None:
                return _eventually_always(arg.arg)
            if isinstance(arg, Finally) and arg.bound is None:
                return normalize(arg)
    if isinstance(f, Globally):
        arg = f.arg
        if is_lookahead(arg):
            return Atom("G", (arg,), f.bound)
        if f.bound is None:
            if isinstance(arg, Finally) and arg.bound is None:
                if is_lookahead(arg.arg):
                    return Atom("GF", (arg.arg,))
                if isinstance(arg.arg, Globally) and arg.arg.bound is None:
                    # G F G x == F G x
                    return _eventually_always(arg.arg.arg)
            if isinstance(arg, Globally) and arg.bound is None:
                return normalize(arg)
            if isinstance(arg, And):
                return _conj([normalize(Globally(p)) for p in _conjuncts(arg)])
    if isinstance(f, GloballyAfter) and is_lookahead(f.arg):
        return Atom("G>", (f.arg,), f.after)
    if isinstance(f, Until) and is_lookahead(f.left) and is_lookahead(f.right):
        return Atom("U", (f.left, f.right), f.bound)
    raise FragmentUnsupported(f"path formula outside the supported fragment: {f}")


def _atoms(skel, out):
    if isinstance(skel, Atom):
        if skel not in out:
            out.append(skel)
    elif isinstance(skel, Not):
        _atoms(skel.arg, out)
    elif isinstance(skel, (And, Or, Implies)):
        _atoms(skel.left, out)
        _atoms(skel.right, out)
    return out


def _compile_lookahead(f, sat) -> Callable[[tuple, int], bool]:
    if is_state_formula(f):
        s = sat(f)
        return lambda seq, k: seq[k] in s
    if isinstance(f, Next):
        g = _compile_lookahead(f.arg, sat)
        return lambda seq, k: g(seq, k + 1)
    if isinstance(f, Not):
        g = _compile_lookahead(f.arg, sat)
        return lambda seq, k: not g(seq, k)
    a, b = _compile_lookahead(f.left, sat), _compile_lookahead(f.right, sat)
    if isinstance(f, And):
        return lambda seq, k: a(seq, k) and b(seq, k)
    if isinstance(f, Or):
        return lambda seq, k: a(seq, k) or b(seq, k)
    return lambda seq, k: (not a(seq, k)) or b(seq, k)


# -- monitors ---------------------------------------------------------------------
# A monitor state is True/False once decided; before that a position counter
# (bounded operators, G>t) or a PENDING/OK marker (unbounded operators).

def _initial(atom: Atom):
    kind, bound = atom.kind, atom.bound
    if kind in ("FG", "GF"):
        return None
    if kind == "G>" or bound is not None:
        return 0
    return OK if kind == "G" else PENDING


def _feed(atom: Atom, state, values: tuple[bool, ...]):
    if isinstance(state, bool) or state is None:
        return state
    kind, bound = atom.kind, atom.bound
    v = values[0]
    if kind == "init":
        return v
    if kind == "G>":
        if state == OK:
            return OK if v else False
        return OK if state == bound else state + 1
    if kind == "F":
        if v:
            return True
    elif kind == "G":
        if not v:
            return False
    else:  # U
        if values[1]:
            return True
        if not v:
            return False
    if bound is None:
        return state
    if state == bound:
        # bound exhausted: F and U failed, G held throughout
        return kind == "G"
    return state + 1


def _decided(state) -> Optional[bool]:
    return state if isinstance(state, bool) else None


def _final(atom: Atom, state, window_values: list[tuple[bool, ...]]) -> bool:
    """Value of an atom on paths absorbed in a bottom SCC."""
    if atom.kind == "FG":
        return all(v[0] for v in window_values)
    if atom.kind == "GF":
        return any(v[0] for v in window_values)
    if isinstance(state, bool):
        return state
    return state == OK  # undecided G and G> hold, pending F and U fail


def _eval3(skel, values: dict) -> Optional[bool]:
    if isinstance(skel, Atom):
        return values[skel]
    if isinstance(skel, BoolConst):
        return skel.value
    if isinstance(skel, Not):
        v = _eval3(skel.arg, values)
        return None if v is None else not v
    a = _eval3(skel.left, values)
    if isinstance(skel, Implies):
        a = None if a is None else not a
    b = _eval3(skel.right, values)
    if isinstance(skel, And):
        if a is False or b is False:
            return False
        return True if a and b else None
    if a is True or b is True:
        return True
    return False if a is False and b is False else None


def product_probability(dtmc, path, sat):
    """(probability, exact, note) of ``path`` from the initial state of ``dtmc``."""
    skel = normalize(path)
    atoms = _atoms(skel, [])
    d = max(depth(a) for atom in atoms for a in atom.args)
    evaluators = [tuple(_compile_lookahead(a, sat) for a in atom.args) for atom in atoms]

    def values_at(seq):
        return [tuple(ev(seq, 0) for ev in evs) for evs in evaluators]

    def settle(seq, mons):
        if len(seq) == d + 1:
            vals = values_at(seq)
            mons = tuple(_feed(atom, m, v) for atom, m, v in zip(atoms, mons, vals))
        decided = {atom: _decided(m) for atom, m in zip(atoms, mons)}
        verdict = _eval3(skel, decided)
        if verdict is True:
            return ACCEPT
        if verdict is False:
            return REJECT
        return (seq, mons)

    ACCEPT, REJECT = "accept", "reject"
    index = {ACCEPT: 0, REJECT: 1}
    keys: list = [ACCEPT, REJECT]
    rows: list[list[tuple[int, Fraction]]] = [[(0, Fraction(1))], [(1, Fraction(1))]]

    start = settle((dtmc.initial,), tuple(_initial(a) for a in atoms))
    if start not in index:
        index[start] = len(keys)
        keys.append(start)
        rows.append([])
    pos = 2
    while pos < len(keys):
        seq, mons = keys[pos]
        merged: dict[int, Fraction] = {}
        for j, q in dtmc.transitions[seq[-1]]:
            nseq = (seq + (j,))[-(d + 1):]
            key = settle(nseq, mons)
            k = index.get(key)
            if k is None:
                k = index[key] = len(keys)
                keys.append(key)
                rows.append([])
            merged[k] = merged.get(k, Fraction(0)) + q
        rows[pos] = sorted(merged.items())
        pos += 1

    accepting = {0}
    succ = [[j for j, _ in row] for row in rows]
    for comp in graphs.bottom_sccs(succ):
        if comp[0] < 2:
            continue
        mons = keys[comp[0]][1]
        window_values = [values_at(keys[v][0]) for v in comp]
        values = {
            atom: _final(atom, m, [wv[i] for wv in window_values])
            for i, (atom, m) in enumerate(zip(atoms, mons))
        }
        if _eval3(skel, values):
            accepting.update(comp)

    start_idx = index[start]
    res = reach_probabilities(rows, accepting)
    note = f"monitor product of {len(keys)} states"
    if not res.exact:
        note += "; floating-point value iteration"
    return res.values[start_idx], res.exact, note
