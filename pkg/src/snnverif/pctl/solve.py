"""Exact reachability probabilities over an explicit chain.

Chains are given as rows ``[(successor, probability), ...]``.  Qualitative
precomputation fixes the probability-0 and probability-1 states by graph
search; the remaining unknowns are solved strongly-connected component by
component with rational Gaussian elimination.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .. import graphs

EXACT_LIMIT = 10**4
FLOAT_EPS = 1e-10

Rows = Sequence[Sequence[tuple[int, Fraction]]]


class ReachResult:
    __slots__ = ("values", "exact", "qualitative_only")

    def __init__(self, values, exact: bool, qualitative_only: bool):
        self.values = values
        self.exact = exact
        self.qualitative_only = qualitative_only


def qualitative(rows: Rows, targets: set[int], allowed: Optional[set[int]] = None):
    """(prob0, prob1) state sets for ``allowed U targets``."""
    n = len(rows)
    succ = [[j for j, _ in row] for row in rows]
    pred = graphs.predecessors(succ)
    if allowed is None:
        allowed = set(range(n))
    can_reach = graphs.backward_reachable(pred, targets, allowed)
    prob0 = set(range(n)) - can_reach
    escape = graphs.backward_reachable(pred, prob0, allowed - targets)
    prob1 = set(range(n)) - escape
    return prob0, prob1


def reach_probabilities(rows: Rows, targets: set[int], allowed: Optional[set[int]] = None) -> ReachResult:
    """Per-state probability of ``allowed U targets`` (``F targets`` when ``allowed`` is None)."""
    n = len(rows)
    prob0, prob1 = qualitative(rows, targets, allowed)
    maybe = [v for v in range(n) if v not in prob0 and v not in prob1]
    values: list = [Fraction(1) if v in prob1 else Fraction(0) for v in range(n)]
    if not maybe:
        return ReachResult(values, True, True)
    if len(maybe) > EXACT_LIMIT:
        return ReachResult(_float_iteration(rows, prob1, maybe), False, False)
    _solve_exact(rows, maybe, values)
    return ReachResult(values, True, False)


def _solve_exact(rows: Rows, maybe: list[int], values: list) -> None:
    in_maybe = set(maybe)
    local = {v: i for i, v in enumerate(maybe)}
    succ = [[local[j] for j, _ in rows[v] if j in in_maybe] for v in maybe]
    # sinks first, so every successor outside the component is already solved
    for comp in graphs.tarjan_sccs(succ):
        members = [maybe[i] for i in comp]
        _solve_component(rows, members, values)


def _solve_component(rows: Rows, members: list[int], values: list) -> None:
    pos = {v: i for i, v in enumerate(members)}
    m = len(members)
    # row i: x_i - sum_{j in C} P(i,j) x_j = sum_{j not in C} P(i,j) values[j]
    matrix: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for v in members:
        row: dict[int, Fraction] = {pos[v]: Fraction(1)}
        b = Fraction(0)
        for j, q in rows[v]:
            if j in pos:
                row[pos[j]] = row.get(pos[j], Fraction(0)) - q
            else:
                b += q * values[j]
        matrix.append(row)
        rhs.append(b)
    # forward elimination without pivoting: I - P restricted to transient
    # states is a nonsingular M-matrix, so every pivot stays positive
    for k in range(m):
        pivot_row = matrix[k]
        pivot = pivot_row[k]
        for i in range(k + 1, m):
            factor = matrix[i].get(k)
            if not factor:
                continue
            factor = factor / pivot
            target = matrix[i]
            for c, a in pivot_row.items():
                if c == k:
                    continue
                target[c] = target.get(c, Fraction(0)) - factor * a
            del target[k]
            rhs[i] -= factor * rhs[k]
    x = [Fraction(0)] * m
    for k in range(m - 1, -1, -1):
        acc = rhs[k]
        for c, a in matrix[k].items():
            if c != k:
                acc -= a * x[c]
        x[k] = acc / matrix[k][k]
    for v, val in zip(members, x):
        values[v] = val


def _float_iteration(rows: Rows, prob1: set[int], maybe: list[int]) -> list[float]:
    n = len(rows)
    x = [1.0 if v in prob1 else 0.0 for v in range(n)]
    float_rows = {v: [(j, float(q)) for j, q in rows[v]] for v in maybe}
    while True:
        delta = 0.0
        for v in maybe:
            new = sum(q * x[j] for j, q in float_rows[v])
            delta = max(delta, abs(new - x[v]))
            x[v] = new
        if delta < FLOAT_EPS:
            return x


def bounded_until(rows: Rows, targets: set[int], allowed: Optional[set[int]], steps: int) -> list[Fraction]:
    """Backward value iteration for ``allowed U<=steps targets`` in exact arithmetic."""
    n = len(rows)
    x = [Fraction(1) if v in targets else Fraction(0) for v in range(n)]
    active = [v for v in range(n) if v not in targets and (allowed is None or v in allowed)]
    for _ in range(steps):
        new = list(x)
        for v in active:
            new[v] = sum((q * x[j] for j, q in rows[v]), Fraction(0))
        x = new
    return x
