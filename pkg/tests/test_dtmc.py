from fractions import Fraction

import pytest

import oracle
from conftest import FIXTURE_NAMES, dtmc_of
from snnverif.dtmc import (
    Dtmc,
    MAX_STATES_ENV,
    StateSpaceOverflow,
    bscc_decompose,
    build_dtmc,
    default_max_states,
    encode,
    transient_distribution,
)
from snnverif.dtmc import step_distribution
from snnverif.network import NetworkSpec
from snnverif.neuron import NeuronParams, SpikeProbabilityTable


def test_zero_input_neuron_rests_forever():
    # rest is 10 below threshold, beyond the last boundary, so it never fires
    table = SpikeProbabilityTable((2, 4, 6, 8), tuple(Fraction(i, 10) for i in range(1, 9)))
    dtmc = build_dtmc(NetworkSpec(neurons=((1, NeuronParams(table=table)),)))
    assert len(dtmc) == 1 and dtmc.transitions == [[(0, Fraction(1))]]
    assert bscc_decompose(dtmc).bsccs == (frozenset({0}),)


def test_single_neuron_golden(single_dtmc):
    # frozen after the first build; every state is checked by the path oracle below
    assert (len(single_dtmc), single_dtmc.num_transitions) == (13, 21)


def test_single_neuron_states_match_path_enumeration(single, single_dtmc):
    seen = set()
    for _, seq in oracle.paths(single, 12):
        seen.update(seq)
    assert seen == set(single_dtmc.states)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_rows_are_stochastic(name):
    dtmc = dtmc_of(name)
    assert all(total == 1 for total in dtmc.row_sums())
    assert all(0 < q <= 1 for row in dtmc.transitions for _, q in row)
    assert all(len({j for j, _ in row}) == len(row) for row in dtmc.transitions)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_transient_distribution_matches_oracle(name):
    dtmc = dtmc_of(name)
    for t in range(4):
        dist = transient_distribution(dtmc, t)
        expected = oracle.distribution(dtmc.spec, t)
        got = {dtmc.states[i]: m for i, m in enumerate(dist) if m}
        assert got == expected
    assert transient_distribution(dtmc, 0)[dtmc.initial] == 1
    assert transient_distribution(dtmc, 1) == [
        sum((q for j2, q in dtmc.transitions[dtmc.initial] if j2 == j), Fraction(0)) for j in range(len(dtmc))
    ]


def test_transient_mass_on_transient_states_vanishes(ci_dtmc):
    part = bscc_decompose(ci_dtmc)
    masses = []
    dist = transient_distribution(ci_dtmc, 0)
    for t in range(1, 121):
        dist = step_distribution(ci_dtmc, dist)
        if t % 20 == 0:
            masses.append(sum(dist[i] for i in part.transient))
    assert all(a >= b for a, b in zip(masses, masses[1:]))
    assert masses[-1] < Fraction(1, 10**6)


def test_bscc_partition(ci_dtmc):
    part = bscc_decompose(ci_dtmc)
    covered = set(part.transient)
    succ = ci_dtmc.successors()
    for b in part.bsccs:
        assert not covered & b
        covered |= b
        assert all(j in b for v in b for j in succ[v])
    assert covered == set(range(len(ci_dtmc)))
    y1, y2 = ci_dtmc.labels["y1=1"], ci_dtmc.labels["y2=1"]
    # winner takes all: in every bottom component neuron 1 keeps firing and neuron 2 is silent
    for b in part.bsccs:
        assert b & y1 and not b & y2


def test_two_absorbing_states():
    half = Fraction(1, 2)
    dtmc = Dtmc(NetworkSpec(), [None] * 3, [[(1, half), (2, half)], [(1, Fraction(1))], [(2, Fraction(1))]])
    part = bscc_decompose(dtmc)
    assert part.bsccs == (frozenset({1}), frozenset({2}))
    assert part.transient == frozenset({0})


def test_overflow_names_frontier(ci):
    with pytest.raises(StateSpaceOverflow, match="frontier of"):
        build_dtmc(ci, max_states=10)


def test_max_states_env(monkeypatch):
    monkeypatch.setenv(MAX_STATES_ENV, "123")
    assert default_max_states() == 123
    monkeypatch.delenv(MAX_STATES_ENV)
    assert default_max_states() == 10**6


def test_labels_rewards_and_dump(single, single_dtmc):
    spikes = single_dtmc.labels["y1=1"]
    assert spikes == single_dtmc.label("s", 1, "=", 1) & single_dtmc.label("y", 1, "=", 1)
    assert single_dtmc.rewards["spike1_count"] == [Fraction(int(i in spikes)) for i in range(len(single_dtmc))]
    assert single_dtmc.label("p", 1, ">=", 11) == frozenset(i for i, s in enumerate(single_dtmc.states) if s.neurons[0].p >= 11)
    text = single_dtmc.dump()
    assert text.startswith("# dtmc single_neuron\nstates 13 initial 0\n")
    assert "transitions 21" in text and "reward spike1_count" in text
    assert encode(single_dtmc.states[0], single) == (0, 0, 0, 500, 0, 0)
