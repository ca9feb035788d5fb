"""Network topology and the synchronous global step.

Neuron-to-neuron edges carry the presynaptic spike bit of the previous
step; input edges carry the (constant or cyclic) input value directly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Union

from .neuron import ABSOLUTE, NeuronParams, NeuronState, integrate, neuron_branches, rest_state

INPUT, NEURON = "input", "neuron"


@dataclass(frozen=True)
class InputSpec:
    id: int
    value: Union[int, tuple[int, ...]] = 1

    @property
    def pattern(self) -> tuple[int, ...]:
        return self.value if isinstance(self.value, tuple) else (self.value,)

    def at(self, phase: int) -> int:
        pat = self.pattern
        return pat[phase % len(pat)]


@dataclass(frozen=True)
class EdgeSpec:
    src_kind: str
    src: int
    dst: int
    weight: int


@dataclass(frozen=True)
class NetworkSpec:
    name: str = "network"
    steps: int = 100
    inputs: tuple[InputSpec, ...] = ()
    neurons: tuple[tuple[int, NeuronParams], ...] = ()
    edges: tuple[EdgeSpec, ...] = ()
    properties: tuple[str, ...] = ()

    @property
    def neuron_ids(self) -> list[int]:
        return [nid for nid, _ in self.ordered_neurons]

    @cached_property
    def ordered_neurons(self) -> tuple[tuple[int, NeuronParams], ...]:
        return tuple(sorted(self.neurons, key=lambda item: item[0]))

    @cached_property
    def index_of(self) -> dict[int, int]:
        return {nid: i for i, (nid, _) in enumerate(self.ordered_neurons)}

    def params(self, neuron_id: int) -> NeuronParams:
        return self.ordered_neurons[self.index_of[neuron_id]][1]

    @cached_property
    def period(self) -> int:
        """Length of the input cycle; 1 when every input is constant."""
        return math.lcm(1, *(len(i.pattern) for i in self.inputs))

    @cached_property
    def _incoming(self):
        inputs = {i.id: i for i in self.inputs}
        table = [([], []) for _ in self.ordered_neurons]
        for e in self.edges:
            from_inputs, from_neurons = table[self.index_of[e.dst]]
            if e.src_kind == INPUT:
                from_inputs.append((inputs[e.src], e.weight))
            else:
                from_neurons.append((self.index_of[e.src], e.weight))
        return table


class NetworkState(NamedTuple):
    neurons: tuple[NeuronState, ...]
    phase: int = 0


def initial_state(spec: NetworkSpec) -> NetworkState:
    return NetworkState(tuple(rest_state(p) for _, p in spec.ordered_neurons), 0)


def weighted_input(neuron_id: int, prev: NetworkState, spec: NetworkSpec) -> int:
    from_inputs, from_neurons = spec._incoming[spec.index_of[neuron_id]]
    total = 0
    for inp, w in from_inputs:
        total += w * inp.at(prev.phase)
    for j, w in from_neurons:
        total += w * prev.neurons[j].y
    return total


def variable_value(spec: NetworkSpec, state: NetworkState, var: str, neuron_id: int) -> int:
    """Read ``s, y, p, aref, rref`` of a neuron, or ``np``: the potential it integrates next."""
    ns = state.neurons[spec.index_of[neuron_id]]
    if var == "np":
        if ns.s == ABSOLUTE:
            return 0
        return integrate(ns, weighted_input(neuron_id, state, spec), spec.params(neuron_id))
    return getattr(ns, var)


def network_branches(prev: NetworkState, spec: NetworkSpec) -> list[tuple[Fraction, NetworkState]]:
    """Product distribution over all neurons, in canonical outcome order."""
    per_neuron = [
        neuron_branches(prev.neurons[i], weighted_input(nid, prev, spec), params)
        for i, (nid, params) in enumerate(spec.ordered_neurons)
    ]
    phase = (prev.phase + 1) % spec.period
    out = []
    for combo in itertools.product(*per_neuron):
        prob = Fraction(1)
        for q, _ in combo:
            prob *= q
        out.append((prob, NetworkState(tuple(st for _, st in combo), phase)))
    return out


@dataclass
class BranchCache:
    """Memoised per-neuron branching, shared by the simulator and the DTMC builder."""

    spec: NetworkSpec
    _memo: dict = field(default_factory=dict)

    def neuron(self, i: int, prev: NetworkState):
        nid, params = self.spec.ordered_neurons[i]
        key = (i, prev.neurons[i], weighted_input(nid, prev, self.spec))
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = neuron_branches(key[1], key[2], params)
        return hit
