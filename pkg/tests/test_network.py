from fractions import Fraction

from snnverif.network import (
    INPUT,
    NEURON,
    BranchCache,
    EdgeSpec,
    InputSpec,
    NetworkSpec,
    NetworkState,
    initial_state,
    network_branches,
    weighted_input,
)
from snnverif.neuron import ABSOLUTE, NeuronParams, NeuronState

P = NeuronParams()


def two_neurons(edges, inputs=(InputSpec(1, 1),), order=(1, 2)):
    return NetworkSpec(inputs=inputs, neurons=tuple((i, P) for i in order), edges=tuple(edges))


def test_initial_state(single, ci):
    assert initial_state(single) == NetworkState((NeuronState(0, 0, 0, 0, 0),), 0)
    assert initial_state(ci).neurons == (NeuronState(), NeuronState())
    assert initial_state(NetworkSpec()).neurons == ()


def test_weighted_input(ci):
    state = NetworkState((NeuronState(), NeuronState(ABSOLUTE, 1, 0, 2, 0)))
    assert weighted_input(1, state, ci) == 11 - 20
    assert weighted_input(2, initial_state(ci), ci) == 0
    spec = NetworkSpec(inputs=(InputSpec(1, 1),), neurons=((1, P),), edges=(EdgeSpec(INPUT, 1, 1, 11),))
    assert weighted_input(1, initial_state(spec), spec) == 11


def test_branch_products():
    spec = two_neurons([EdgeSpec(INPUT, 1, 1, 11), EdgeSpec(INPUT, 1, 2, 11)])
    branches = network_branches(initial_state(spec), spec)
    assert [q for q, _ in branches] == [Fraction(1, 4)] * 4
    spiking = NetworkState((NeuronState(ABSOLUTE, 1, 0, 2, 0), NeuronState()))
    assert len(network_branches(spiking, spec)) == 2


def test_synaptic_delay_ignores_evaluation_order():
    edges = [EdgeSpec(INPUT, 1, 1, 11), EdgeSpec(NEURON, 1, 2, 30), EdgeSpec(NEURON, 2, 1, -20)]
    a = two_neurons(edges, order=(1, 2))
    b = two_neurons(reversed(edges), order=(2, 1))
    frontier = [initial_state(a)]
    for _ in range(4):
        nxt = []
        for st in frontier:
            assert network_branches(st, a) == network_branches(st, b)
            nxt += [s for _, s in network_branches(st, a)]
        frontier = list(dict.fromkeys(nxt))
    # a spike emitted this step reaches the target only one step later
    st0 = initial_state(a)
    spiked = [s for _, s in network_branches(st0, a) if s.neurons[0].y == 1][0]
    assert spiked.neurons[1].p == 0
    assert weighted_input(2, spiked, a) == 30


def test_cyclic_input_pattern():
    spec = NetworkSpec(inputs=(InputSpec(1, (1, 0, 0)),), neurons=((1, P),), edges=(EdgeSpec(INPUT, 1, 1, 11),))
    assert spec.period == 3
    st = initial_state(spec)
    phases = []
    for _ in range(4):
        phases.append((st.phase, weighted_input(1, st, spec)))
        st = network_branches(st, spec)[0][1]
    assert phases == [(0, 11), (1, 0), (2, 0), (0, 11)]


def test_canonical_and_repeatable(ci):
    st = initial_state(ci)
    assert network_branches(st, ci) == network_branches(st, ci)
    cache = BranchCache(ci)
    assert cache.neuron(0, st) is cache.neuron(0, st)
