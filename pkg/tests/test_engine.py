import math
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dtmc_of, load
from snnverif import engine
from snnverif.dtmc import transient_distribution
from snnverif.network import INPUT, EdgeSpec, InputSpec, NetworkSpec
from snnverif.neuron import NeuronParams
from snnverif.pctl import FragmentUnsupported, check, expected_cumulative_reward
from snnverif.pctl.finite import NOT_CHECKABLE


def driven(arp, rrp, weight=100):
    params = NeuronParams(arp=arp, rrp=rrp)
    return NetworkSpec(inputs=(InputSpec(1, 1),), neurons=((1, params),), edges=(EdgeSpec(INPUT, 1, 1, weight),))


def test_same_seed_same_trace(ci):
    a = engine.simulate(ci, 200, seed=42)
    b = engine.simulate(ci, 200, seed=42)
    c = engine.simulate(ci, 200, seed=43)
    assert a.states == b.states
    assert a.states != c.states


def test_runs_replay_independently(ci):
    # run r of an ensemble is the same as simulating run r on its own
    freqs = engine.spike_frequencies(ci, 30, 3, seed=9)
    alone = [engine.simulate(ci, 30, seed=9, run=r) for r in range(3)]
    for t in range(31):
        expected = [Fraction(sum(tr.states[t].neurons[i].y for tr in alone), 3) for i in range(2)]
        assert freqs[t] == expected


def test_zero_steps(single):
    trace = engine.simulate(single, 0, seed=1)
    assert trace.steps == 0 and len(trace.states) == 1
    assert engine.export_trace_csv(trace).splitlines() == ["t,n1.y,n1.p,n1.s,n1.aref,n1.rref", "0,0,0,0,0,0"]
    with pytest.raises(ValueError):
        engine.simulate(single, -1)


@pytest.mark.parametrize("arp", [0, 1, 2, 4])
def test_saturated_neuron_fires_every_arp_plus_two_steps(arp):
    trace = engine.simulate(driven(arp, 0), 60, seed=3)
    times = trace.spike_times(1)
    assert times[0] == 1
    assert {b - a for a, b in zip(times, times[1:])} == {arp + 2}


def test_trace_respects_model_invariants(ci):
    trace = engine.simulate(ci, 500, seed=5)
    for _, neurons in trace.records():
        for ns in neurons.values():
            assert ns.y == 0 or (ns.s == 1 and ns.p == 0)
            assert ns.aref == 0 or ns.s == 1
            assert ns.rref == 0 or ns.s == 2


def test_every_sampled_state_is_reachable(ci_dtmc):
    states = set(ci_dtmc.states)
    for run in range(20):
        assert set(engine.simulate(ci_dtmc.spec, 150, seed=11, run=run).states) <= states


def test_hoeffding():
    assert engine.hoeffding_runs(0.01, 0.01) == 26492
    assert engine.hoeffding_runs(0.02, 0.01) == 6623
    with pytest.raises(ValueError):
        engine.hoeffding_runs(0, 0.5)


def test_wilson_reference_values():
    lo, hi = engine.wilson_interval(0, 10, 0.95)
    assert lo == pytest.approx(0, abs=1e-12) and hi == pytest.approx(0.27753, abs=1e-5)
    lo, hi = engine.wilson_interval(5, 10, 0.95)
    assert (lo, hi) == (pytest.approx(0.23659, abs=1e-5), pytest.approx(0.76341, abs=1e-5))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5000).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))),
       st.sampled_from([0.9, 0.95, 0.99]))
def test_wilson_contains_point(counts, confidence):
    k, n = counts
    lo, hi = engine.wilson_interval(k, n, confidence)
    assert 0 <= lo <= k / n + 1e-12 and k / n - 1e-12 <= hi <= 1


def test_estimate_covers_exact_value(ci_dtmc):
    prop = "P=? [ F<=10 (y2=1) ]"
    exact = check(ci_dtmc, prop).value
    est = engine.estimate_bounded(ci_dtmc.spec, prop, 4000, 0.99, seed=1)
    assert est.ci_low <= exact <= est.ci_high
    assert est.ci_low <= est.point <= est.ci_high
    assert est.as_dict()["runs"] == 4000


def test_estimate_independent_of_workers(ci):
    prop = "P=? [ G<=20 (y2=0) ]"
    one = engine.estimate_bounded(ci, prop, 600, seed=4, workers=1)
    three = engine.estimate_bounded(ci, prop, 600, seed=4, workers=3)
    assert one == three


def test_unbounded_properties_are_rejected(ci):
    for prop in ["P=? [ F (y2=1) ]", "P>=1 [ G>100 (y2=0) ]", "P=? [ F<=3 G (y1=0) ]"]:
        with pytest.raises(FragmentUnsupported, match=NOT_CHECKABLE):
            engine.estimate_bounded(ci, prop, 10)


def test_spike_frequency_within_three_sigma(ci_dtmc):
    runs, t = 3000, 12
    freqs = engine.spike_frequencies(ci_dtmc.spec, t, runs, seed=21)
    dist = transient_distribution(ci_dtmc, t)
    for i, nid in enumerate(ci_dtmc.spec.neuron_ids):
        spiking = ci_dtmc.labels[f"y{nid}=1"]
        p = float(sum(dist[s] for s in spiking))
        sigma = math.sqrt(p * (1 - p) / runs)
        assert abs(float(freqs[t][i]) - p) <= 3 * sigma + 1e-12


def test_mean_spike_count_matches_reward(single_dtmc):
    mean, sem = engine.mean_spike_count(single_dtmc.spec, 1, 40, 2000, seed=2)
    exact = float(expected_cumulative_reward(single_dtmc, "spike1_count", 40))
    assert abs(mean - exact) <= 3 * sem


def test_csv_round_trip(ci):
    trace = engine.simulate(ci, 80, seed=8)
    ids, rows = engine.read_trace_csv(engine.export_trace_csv(trace))
    assert ids == list(ci.neuron_ids)
    assert [t for t, _ in rows] == list(range(81))
    assert [n for _, n in rows] == [st_.neurons for st_ in trace.states]
    with pytest.raises(ValueError):
        engine.read_trace_csv("time,a\n0,1\n")


def test_raster_svg_has_one_tick_per_spike(ci):
    trace = engine.simulate(ci, 120, seed=8)
    root = ET.fromstring(engine.raster_svg(trace))
    ticks = [el for el in root.iter("{http://www.w3.org/2000/svg}line") if el.get("stroke") == "black"]
    assert len(ticks) == sum(len(trace.spike_times(n)) for n in ci.neuron_ids)


def test_frequencies_csv_shape():
    spec = load("single_neuron")
    text = engine.export_frequencies_csv(spec, engine.spike_frequencies(spec, 5, 10, seed=0))
    lines = text.splitlines()
    assert lines[0] == "t,n1.rate" and len(lines) == 7 and lines[1] == "0,0.000000"


def test_fixture_traces_are_valid_dtmc_paths():
    dtmc = dtmc_of("single_neuron")
    index = {s: i for i, s in enumerate(dtmc.states)}
    trace = engine.simulate(dtmc.spec, 200, seed=13)
    for a, b in zip(trace.states, trace.states[1:]):
        assert any(j == index[b] and q > 0 for j, q in dtmc.transitions[index[a]])


def test_safety_property_over_fifty_steps_is_always_observed(single):
    est = engine.estimate_bounded(single, "P>=1 [ G<=49 ((y1=1) -> (X (s1=1))) ]", 300, seed=6)
    assert est.point == 1


def test_winner_takes_all_in_every_sampled_run(ci):
    # after the transient exactly one neuron keeps spiking
    for run in range(40):
        trace = engine.simulate(ci, 600, seed=31, run=run)
        late = [sum(1 for t in trace.spike_times(n) if t > 400) for n in ci.neuron_ids]
        assert sorted(x > 0 for x in late) == [False, True], (run, late)


def test_spike_within_three_steps_matches_exact(single_dtmc):
    prop = "P=? [ F<=3 (y1=1) ]"
    est = engine.estimate_bounded(single_dtmc.spec, prop, 10000, seed=12)
    assert abs(float(est.point - check(single_dtmc, prop).value)) <= 0.05
