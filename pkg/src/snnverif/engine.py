"""Seeded Monte-Carlo simulation and statistical estimation of bounded properties.

Randomness comes from numpy's Philox-4x64-10 counter-based generator.  Run
``i`` of an experiment with seed ``s`` uses the Philox key ``s XOR i`` and a
zero counter, so any run can be replayed on its own and ensemble results do
not depend on how runs are spread over workers.  One uniform double is drawn
per network step and compared exactly against the cumulative branch
probabilities.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Optional

import numpy as np

from .network import NetworkSpec, NetworkState, initial_state, network_branches
from .neuron import NeuronState
from .pctl.finite import PrefixEvaluator, path_body

SEED_MASK = (1 << 64) - 1
DEFAULT_DT = Fraction(1, 1000)
FIELDS = ("y", "p", "s", "aref", "rref")


def run_generator(seed: int, run: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed ^ run) & SEED_MASK))


@dataclass(frozen=True)
class Trace:
    """States at time indices ``0..steps``; ``dt_label`` is metadata only."""

    spec: NetworkSpec
    states: tuple[NetworkState, ...]
    seed: int
    dt_label: Fraction = DEFAULT_DT

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def records(self):
        """``(t, {neuron_id: NeuronState})`` per time index."""
        ids = self.spec.neuron_ids
        for t, st in enumerate(self.states):
            yield t, dict(zip(ids, st.neurons))

    def spike_times(self, neuron_id: int) -> list[int]:
        i = self.spec.index_of[neuron_id]
        return [t for t, st in enumerate(self.states) if st.neurons[i].y]


class Stepper:
    """Samples successor states; branch tables are memoised per global state."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self._table: dict = {}

    def branches(self, state: NetworkState):
        hit = self._table.get(state)
        if hit is None:
            cum, nexts, acc = [], [], Fraction(0)
            for q, nxt in network_branches(state, self.spec):
                acc += q
                cum.append(acc)
                nexts.append(nxt)
            hit = self._table[state] = (cum, nexts)
        return hit

    def step(self, state: NetworkState, u: float) -> NetworkState:
        cum, nexts = self.branches(state)
        if len(nexts) == 1:
            return nexts[0]
        for c, nxt in zip(cum, nexts):
            if u < c:
                return nxt
        return nexts[-1]

    def run(self, steps: int, rng: np.random.Generator) -> list[NetworkState]:
        state = initial_state(self.spec)
        out = [state]
        if steps:
            for u in rng.random(steps):
                state = self.step(state, float(u))
                out.append(state)
        return out


def simulate(spec: NetworkSpec, steps: Optional[int] = None, seed: int = 0, run: int = 0) -> Trace:
    if steps is None:
        steps = spec.steps
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    states = Stepper(spec).run(steps, run_generator(seed, run))
    return Trace(spec, tuple(states), seed)


# -- statistics ------------------------------------------------------------------------

def hoeffding_runs(epsilon: float, delta: float) -> int:
    """Runs n with ``n >= ln(2/delta) / (2 epsilon^2)``."""
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    return math.ceil(math.log(2 / delta) / (2 * epsilon * epsilon))


def wilson_interval(successes: int, runs: int, confidence: float) -> tuple[float, float]:
    if runs < 1:
        raise ValueError("runs must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / runs
    z2n = z * z / runs
    centre = (phat + z2n / 2) / (1 + z2n)
    half = z * math.sqrt(phat * (1 - phat) / runs + z2n / (4 * runs)) / (1 + z2n)
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class Estimate:
    point: Fraction
    ci_low: Fraction
    ci_high: Fraction
    runs: int
    confidence: Fraction

    def as_dict(self) -> dict:
        return {
            "point": float(self.point),
            "ci_low": float(self.ci_low),
            "ci_high": float(self.ci_high),
            "runs": self.runs,
            "confidence": float(self.confidence),
        }


def _count_successes(spec: NetworkSpec, body, seed: int, runs: range) -> int:
    check = PrefixEvaluator(body, spec)
    stepper = Stepper(spec)
    return sum(check(stepper.run(check.horizon, run_generator(seed, r))) for r in runs)


def _chunks(runs: int, workers: int) -> list[range]:
    size = -(-runs // workers)
    return [range(lo, min(lo + size, runs)) for lo in range(0, runs, size)]


def estimate_bounded(
    spec: NetworkSpec,
    path_property,
    runs: int,
    confidence: float = 0.99,
    seed: int = 0,
    workers: int = 1,
) -> Estimate:
    """Fraction of sampled prefixes satisfying a step-bounded path property.

    ``path_property`` is a ``P..[ ... ]`` string, a parsed formula, or a bare
    path formula.  Unbounded operators raise ``FragmentUnsupported``.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    body = path_body(path_property)
    PrefixEvaluator(body, spec)  # rejects unbounded properties before any sampling
    if workers <= 1:
        hits = _count_successes(spec, body, seed, range(runs))
    else:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_count_successes, spec, body, seed, chunk) for chunk in _chunks(runs, workers)]
            hits = sum(f.result() for f in futures)
    point = Fraction(hits, runs)
    lo, hi = wilson_interval(hits, runs, confidence)
    return Estimate(point, min(Fraction(lo), point), max(Fraction(hi), point), runs, Fraction(str(confidence)))


def spike_frequencies(spec: NetworkSpec, steps: int, runs: int, seed: int = 0) -> list[list[Fraction]]:
    """Per-step fraction of runs in which each neuron spikes; rows ``t = 0..steps``."""
    stepper = Stepper(spec)
    n = len(spec.neuron_ids)
    counts = [[0] * n for _ in range(steps + 1)]
    for r in range(runs):
        for t, st in enumerate(stepper.run(steps, run_generator(seed, r))):
            row = counts[t]
            for i, ns in enumerate(st.neurons):
                row[i] += ns.y
    return [[Fraction(c, runs) for c in row] for row in counts]


def mean_spike_count(spec: NetworkSpec, neuron_id: int, steps: int, runs: int, seed: int = 0) -> tuple[float, float]:
    """Sample mean and standard error of the spike count over ``0..steps``."""
    stepper = Stepper(spec)
    i = spec.index_of[neuron_id]
    counts = np.array(
        [sum(st.neurons[i].y for st in stepper.run(steps, run_generator(seed, r))) for r in range(runs)],
        dtype=float,
    )
    sem = counts.std(ddof=1) / math.sqrt(runs) if runs > 1 else float("inf")
    return float(counts.mean()), float(sem)


# -- export --------------------------------------------------------------------------------

def csv_header(spec: NetworkSpec) -> list[str]:
    return ["t"] + [f"n{nid}.{f}" for nid in spec.neuron_ids for f in FIELDS]


def export_trace_csv(trace: Trace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(trace.spec))
    for t, st in enumerate(trace.states):
        writer.writerow([t] + [getattr(ns, f) for ns in st.neurons for f in FIELDS])
    return buf.getvalue()


def read_trace_csv(text: str) -> tuple[list[int], list[tuple[int, tuple[NeuronState, ...]]]]:
    """Inverse of :func:`export_trace_csv`: neuron ids and ``(t, neuron states)`` rows."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if not header or header[0] != "t" or (len(header) - 1) % len(FIELDS):
        raise ValueError("not a trace CSV header")
    ids = []
    for col in header[1::len(FIELDS)]:
        ids.append(int(col[1:].split(".")[0]))
    if header != ["t"] + [f"n{nid}.{f}" for nid in ids for f in FIELDS]:
        raise ValueError("unexpected trace CSV columns")
    rows = []
    for raw in reader:
        vals = [int(v) for v in raw]
        neurons = []
        for k in range(len(ids)):
            chunk = dict(zip(FIELDS, vals[1 + k * len(FIELDS): 1 + (k + 1) * len(FIELDS)]))
            neurons.append(NeuronState(**chunk))
        rows.append((vals[0], tuple(neurons)))
    return ids, rows


def export_frequencies_csv(spec: NetworkSpec, freqs: list[list[Fraction]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"n{nid}.rate" for nid in spec.neuron_ids])
    for t, row in enumerate(freqs):
        writer.writerow([t] + [f"{float(q):.6f}" for q in row])
    return buf.getvalue()


def raster_svg(trace: Trace, cell: int = 6, row_height: int = 18) -> str:
    """Spike raster: one row per neuron, one tick per spike."""
    ids = trace.spec.neuron_ids
    margin = 40
    width = margin + cell * max(trace.steps + 1, 1) + 10
    height = row_height * len(ids) + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for row, nid in enumerate(ids):
        y0 = 10 + row * row_height
        parts.append(f'<text x="4" y="{y0 + row_height - 6}" font-family="monospace" font-size="11">n{nid}</text>')
        parts.append(
            f'<line x1="{margin}" y1="{y0 + row_height - 2}" x2="{width - 10}" y2="{y0 + row_height - 2}" '
            f'stroke="#ccc"/>'
        )
        for t in trace.spike_times(nid):
            x = margin + t * cell + cell // 2
            parts.append(f'<line x1="{x}" y1="{y0 + 2}" x2="{x}" y2="{y0 + row_height - 4}" stroke="black" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
