"""Acceptance criteria 1-9.  Each test prints a single PASS or FAIL line.

Run ``pytest -v tests/test_acceptance.py`` to see the lines inline.
"""
import math
import shutil
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

import oracle
from conftest import FIXTURE_NAMES, GOLDEN, dtmc_of, load
from snnverif import engine, prismgen
from snnverif.dtmc import build_dtmc, step_distribution
from snnverif.pctl import check, parse_formula
from snnverif.snnrf import parse_snnrf, serialize
from test_pctl import BOUNDED, BOUNDED_MULTI
from test_snnrf import fuzz, specs

EPSILON, DELTA = 0.02, 0.01

CROSS_CHECK = {
    "single_neuron": ["P=? [ X (y1=1) ]", "P=? [ F<=15 (p1>=30) ]", "P=? [ G<=20 !(p1>=31) ]"],
    "contralateral_inhibition": [
        "P=? [ F<=10 (y2=1) ]", "P=? [ X (y1=1) ]", "P=? [ (y2=0) U<=8 (s1=2 & p1 >= 20) ]",
    ],
    "cec_single_spike": ["P=? [ F<=3 (y3=1) ]", "P=? [ X (y1=1 & y2=1) ]", "P=? [ F<=5 (y1=1 & y2=0) ]"],
    "cec_both_required": ["P=? [ F<=3 (y3=1) ]", "P=? [ G<=6 (y3=0) ]", "P=? [ F<=8 (y3=1 & X (y3=0)) ]"],
}


def criterion(number):
    """Run the body, which returns a detail string, and print its PASS/FAIL line."""

    def wrap(body):
        def test(capsys):
            try:
                detail = body()
            except BaseException as exc:
                with capsys.disabled():
                    print(f"\nFAIL criterion {number}: {type(exc).__name__}: {exc}")
                raise
            with capsys.disabled():
                print(f"\nPASS criterion {number}: {detail}")

        test.__name__, test.__doc__ = body.__name__, body.__doc__
        return test

    return wrap


def timed_check(name, prop_index):
    start = time.perf_counter()
    dtmc = build_dtmc(load(name))
    value = check(dtmc, dtmc.spec.properties[prop_index]).value
    return value, time.perf_counter() - start


@criterion(1)
def test_criterion_1_single_neuron():
    (p1, t1), (p2, t2), (p3, t3) = (timed_check("single_neuron", i) for i in range(3))
    assert (p1, p2) == (True, True), (p1, p2)
    assert p3 == Fraction(1, 2), p3
    assert max(t1, t2, t3) < 1, (t1, t2, t3)
    return f"P1={p1} P2={p2} P3={p3} (slowest {max(t1, t2, t3) * 1000:.0f} ms)"


@criterion(2)
def test_criterion_2_contralateral_inhibition():
    (p4, t4), (p5, t5) = timed_check("contralateral_inhibition", 0), timed_check("contralateral_inhibition", 1)
    assert p4 == 1 and isinstance(p4, Fraction), p4
    assert p5 is True, p5
    assert max(t4, t5) < 10
    return f"P4={p4} P5={p5} (slowest {max(t4, t5) * 1000:.0f} ms)"


@criterion(3)
def test_criterion_3_convergent_excitation():
    p6, t6 = timed_check("cec_single_spike", 0)
    p7, t7 = timed_check("cec_both_required", 0)
    assert (p6, p7) == (True, True), (p6, p7)
    assert max(t6, t7) < 10
    return f"P6={p6} P7={p7} (slowest {max(t6, t7) * 1000:.0f} ms)"


@criterion(4)
def test_criterion_4_oracle_equivalence():
    compared = 0
    for name in FIXTURE_NAMES:
        dtmc = dtmc_of(name)
        props = BOUNDED if len(dtmc.spec.neurons) == 1 else BOUNDED + BOUNDED_MULTI
        for text in props:
            expected = oracle.probability(dtmc.spec, parse_formula(text).path, 4)
            got = check(dtmc, text).value
            assert got == expected, f"{name}: {text}: {got} != {expected}"
            compared += 1
    return f"{compared} bounded properties equal brute-force enumeration exactly"


@pytest.mark.slow
@criterion(5)
def test_criterion_5_statistical_bridge():
    runs = engine.hoeffding_runs(EPSILON, DELTA)
    exact = {name: [check(dtmc_of(name), p).value for p in props] for name, props in CROSS_CHECK.items()}
    passed, worst = 0, 0.0
    for rep in range(20):
        ok = True
        for name, props in CROSS_CHECK.items():
            spec = dtmc_of(name).spec
            for prop, value in zip(props, exact[name]):
                est = engine.estimate_bounded(spec, prop, runs, seed=1000 + rep)
                err = abs(float(est.point - value))
                worst = max(worst, err)
                ok = ok and err <= EPSILON
        passed += ok
    assert passed >= 19, f"only {passed}/20 repetitions within epsilon"
    return f"{passed}/20 repetitions with all 12 estimates within {EPSILON} (n={runs}, worst error {worst:.4f})"


@pytest.mark.slow
@criterion(6)
def test_criterion_6_distributions():
    for name in FIXTURE_NAMES:
        dtmc = dtmc_of(name)
        assert all(s == 1 for s in dtmc.row_sums()), name
        dist = [Fraction(0)] * len(dtmc)
        dist[dtmc.initial] = Fraction(1)
        for t in range(1, 201):
            dist = step_distribution(dtmc, dist)
            assert sum(dist) == 1, (name, t)
    return "all rows and transient distributions for t <= 200 sum to exactly 1"


@criterion(7)
def test_criterion_7_reward_shape():
    dtmc = dtmc_of("single_neuron")
    reward = check(dtmc, 'R{"spike1_count"}=? [ C<=100 ]').value
    mean, sem = engine.mean_spike_count(dtmc.spec, 1, 100, 5000, seed=17)
    assert abs(mean - float(reward)) <= 3 * sem, (mean, float(reward), sem)
    return f"exact {float(reward):.4f} vs Monte-Carlo {mean:.4f} (3 sigma = {3 * sem:.4f})"


@criterion(8)
def test_criterion_8_codegen():
    for name in ("single_neuron", "contralateral_inhibition"):
        spec = load(name)
        assert prismgen.emit_model(spec) == (GOLDEN / f"{name}.pm").read_text(encoding="utf-8"), name
        assert prismgen.emit_properties(spec, spec.properties) == \
            (GOLDEN / f"{name}.props").read_text(encoding="utf-8"), name
    if shutil.which("prism") is None:
        return "goldens match byte-exactly; PRISM not installed, optional comparison not run"
    tmp_path = Path(tempfile.mkdtemp())
    for name in FIXTURE_NAMES:
        dtmc = dtmc_of(name)
        props = [p for p in dtmc.spec.properties if not p.startswith("R{")]
        model, prop_file = tmp_path / f"{name}.pm", tmp_path / f"{name}.props"
        model.write_text(prismgen.emit_model(dtmc.spec))
        prop_file.write_text(prismgen.emit_properties(dtmc.spec, props))
        results = prismgen.parse_prism_results(prismgen.run_prism(model, prop_file))
        for text, got in zip(props, results):
            ours = check(dtmc, text).value
            expected = str(ours).lower() if isinstance(ours, bool) else ours
            assert got == expected or (not isinstance(ours, bool) and math.isclose(float(got), float(ours), abs_tol=1e-6))
    return "goldens match byte-exactly; PRISM agrees on P1-P7"


@pytest.mark.slow
@criterion(9)
def test_criterion_9_format():
    count = []

    @settings(max_examples=1000, deadline=None, suppress_health_check=list(HealthCheck), database=None)
    @given(specs())
    def round_trip(spec):
        assert parse_snnrf(serialize(spec)) == spec
        count.append(1)

    round_trip()
    assert len(count) >= 1000, len(count)
    parsed, rejected = fuzz(10**5, seed=2024)
    return f"{len(count)} round trips; 10^5 fuzzed documents: {parsed} parsed, {rejected} rejected, no crashes"


