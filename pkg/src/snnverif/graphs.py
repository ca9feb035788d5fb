"""Graph routines over integer-indexed successor lists."""
from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence


def tarjan_sccs(succ: Sequence[Iterable[int]]) -> list[list[int]]:
    """Strongly connected components, sinks first (reverse topological order).

    Iterative so that long transient chains do not hit the recursion limit.
    """
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def bottom_sccs(succ: Sequence[Iterable[int]]) -> list[list[int]]:
    """SCCs with no edge leaving them."""
    result = []
    for comp in tarjan_sccs(succ):
        members = set(comp)
        if all(w in members for v in comp for w in succ[v]):
            result.append(sorted(comp))
    return result


def forward_reachable(succ: Sequence[Iterable[int]], sources: Iterable[int]) -> set[int]:
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def predecessors(succ: Sequence[Iterable[int]]) -> list[list[int]]:
    pred: list[list[int]] = [[] for _ in succ]
    for v, ws in enumerate(succ):
        for w in ws:
            pred[w].append(v)
    return pred


def backward_reachable(pred: Sequence[Iterable[int]], targets: Iterable[int], allowed=None) -> set[int]:
    """States that can reach ``targets`` moving only through ``allowed`` states."""
    seen = set(targets)
    queue = deque(seen)
    while queue:
        w = queue.popleft()
        for v in pred[w]:
            if v not in seen and (allowed is None or v in allowed):
                seen.add(v)
                queue.append(v)
    return seen
