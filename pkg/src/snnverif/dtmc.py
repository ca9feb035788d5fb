"""Explicit-state DTMC built by breadth-first reachability over the network step."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import graphs
from .network import BranchCache, NetworkSpec, NetworkState, initial_state, variable_value

DEFAULT_MAX_STATES = 10**6
MAX_STATES_ENV = "SNNVERIF_MAX_STATES"

STATE_VARS = ("s", "y", "p", "aref", "rref", "np")


class StateSpaceOverflow(RuntimeError):
    pass


def default_max_states() -> int:
    raw = os.environ.get(MAX_STATES_ENV)
    return int(raw) if raw else DEFAULT_MAX_STATES


def encode(state: NetworkState, spec: NetworkSpec) -> tuple[int, ...]:
    """Canonical flat encoding: phase, then (s, y, p - p_min, aref, rref) per neuron."""
    flat = [state.phase]
    for (_, params), ns in zip(spec.ordered_neurons, state.neurons):
        flat += (ns.s, ns.y, ns.p - params.p_min, ns.aref, ns.rref)
    return tuple(flat)


@dataclass
class Dtmc:
    spec: NetworkSpec
    states: list[NetworkState]
    transitions: list[list[tuple[int, Fraction]]]
    initial: int = 0
    labels: dict[str, frozenset[int]] = field(default_factory=dict)
    rewards: dict[str, list[Fraction]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return sum(len(row) for row in self.transitions)

    def successors(self) -> list[list[int]]:
        return [[j for j, _ in row] for row in self.transitions]

    def value(self, index: int, var: str, neuron_id: int) -> int:
        """Value of a state variable; ``np`` is the potential the neuron would integrate next."""
        return variable_value(self.spec, self.states[index], var, neuron_id)

    def where(self, predicate: Callable[[int], bool]) -> frozenset[int]:
        return frozenset(i for i in range(len(self.states)) if predicate(i))

    def label(self, var: str, neuron_id: int, op: str, const: int) -> frozenset[int]:
        """State set of the atomic proposition ``<var><id> <op> <const>``, cached in ``labels``."""
        name = f"{var}{neuron_id}{op}{const}"
        if name not in self.labels:
            test = _COMPARATORS[op]
            self.labels[name] = self.where(lambda i: test(self.value(i, var, neuron_id), const))
        return self.labels[name]

    def row_sums(self) -> list[Fraction]:
        return [sum((q for _, q in row), Fraction(0)) for row in self.transitions]

    def dump(self) -> str:
        """Explicit text format: states, ``src dst prob`` transitions, labels, rewards."""
        lines = [f"# dtmc {self.spec.name}", f"states {len(self.states)} initial {self.initial}"]
        for i, st in enumerate(self.states):
            lines.append(f"{i} " + " ".join(map(str, encode(st, self.spec))))
        lines.append(f"transitions {self.num_transitions}")
        for i, row in enumerate(self.transitions):
            lines.extend(f"{i} {j} {q}" for j, q in row)
        for name in sorted(self.labels):
            lines.append(f"label {name} " + " ".join(map(str, sorted(self.labels[name]))))
        for name in sorted(self.rewards):
            vec = self.rewards[name]
            lines.append(f"reward {name} " + " ".join(f"{i}:{v}" for i, v in enumerate(vec) if v))
        return "\n".join(lines) + "\n"


_COMPARATORS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def build_dtmc(spec: NetworkSpec, max_states: int | None = None) -> Dtmc:
    if max_states is None:
        max_states = default_max_states()
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    cache = BranchCache(spec)
    n = len(spec.ordered_neurons)
    period = spec.period
    start = initial_state(spec)
    index = {start: 0}
    states = [start]
    transitions: list[list[tuple[int, Fraction]]] = []
    products: dict[tuple[Fraction, ...], Fraction] = {}

    for st in states:
        per_neuron = [cache.neuron(i, st) for i in range(n)]
        phase = (st.phase + 1) % period
        row = []
        for combo in itertools.product(*per_neuron):
            probs = tuple(q for q, _ in combo)
            prob = products.get(probs)
            if prob is None:
                prob = Fraction(1)
                for q in probs:
                    prob *= q
                products[probs] = prob
            nxt = NetworkState(tuple(s for _, s in combo), phase)
            j = index.get(nxt)
            if j is None:
                if len(states) >= max_states:
                    frontier = len(states) - len(transitions)
                    raise StateSpaceOverflow(
                        f"state space exceeds max_states={max_states} "
                        f"(frontier of {frontier} unexpanded states)"
                    )
                j = index[nxt] = len(states)
                states.append(nxt)
            row.append((j, prob))
        transitions.append(row)

    dtmc = Dtmc(spec, states, transitions)
    for nid in spec.neuron_ids:
        i = spec.index_of[nid]
        dtmc.rewards[f"spike{nid}_count"] = [Fraction(s.neurons[i].y) for s in states]
        for b in (0, 1):
            dtmc.label("y", nid, "=", b)
        for v in (0, 1, 2):
            dtmc.label("s", nid, "=", v)
    return dtmc


def transient_distribution(dtmc: Dtmc, t: int) -> list[Fraction]:
    if t < 0:
        raise ValueError("t must be nonnegative")
    dist = [Fraction(0)] * len(dtmc)
    dist[dtmc.initial] = Fraction(1)
    for _ in range(t):
        dist = step_distribution(dtmc, dist)
    return dist


def step_distribution(dtmc: Dtmc, dist: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * len(dist)
    for i, mass in enumerate(dist):
        if mass:
            for j, q in dtmc.transitions[i]:
                out[j] += mass * q
    return out


@dataclass(frozen=True)
class BsccPartition:
    bsccs: tuple[frozenset[int], ...]
    transient: frozenset[int]


def bscc_decompose(dtmc: Dtmc) -> BsccPartition:
    bottoms = graphs.bottom_sccs(dtmc.successors())
    bsccs = tuple(frozenset(b) for b in sorted(bottoms, key=min))
    recurrent = set().union(*bsccs) if bsccs else set()
    return BsccPartition(bsccs, frozenset(set(range(len(dtmc))) - recurrent))
