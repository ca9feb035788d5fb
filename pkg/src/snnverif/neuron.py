"""Single RP-LI&F neuron: potential integration, spike law and refractory automaton.

All probabilities are :class:`fractions.Fraction` so that one-step
distributions sum to exactly one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

NORMAL, ABSOLUTE, RELATIVE = 0, 1, 2

DEFAULT_PROBS = tuple(
    Fraction(x)
    for x in ("0.05", "0.10", "0.20", "0.30", "0.40", "0.50", "0.65", "0.80", "0.90", "0.95")
)


def as_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through their shortest repr so that ``0.7`` becomes ``7/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected a number, got {type(value).__name__}")


@dataclass(frozen=True)
class SpikeProbabilityTable:
    boundaries: tuple[int, ...]
    probs: tuple[Fraction, ...]
    allow_non_monotone: bool = False

    @property
    def k(self) -> int:
        return len(self.boundaries)

    @classmethod
    def default(cls, tau: int, k: int = 5) -> "SpikeProbabilityTable":
        if k != 5:
            raise ValueError("the default probability list is defined for k=5 only")
        step = max(1, -(-tau // k))
        return cls(tuple(step * i for i in range(1, k + 1)), DEFAULT_PROBS)

    def problems(self) -> list[str]:
        """Invariant violations, empty when the table is usable."""
        out = []
        if self.k < 1:
            out.append("probability table needs at least one boundary")
        if any(b <= 0 for b in self.boundaries):
            out.append("boundaries must be positive")
        if any(a >= b for a, b in zip(self.boundaries, self.boundaries[1:])):
            out.append("boundaries must be strictly increasing")
        if len(self.probs) != 2 * self.k:
            out.append(f"expected {2 * self.k} probabilities for {self.k} boundaries, got {len(self.probs)}")
        if any(not 0 <= q <= 1 for q in self.probs):
            out.append("probabilities must lie in [0, 1]")
        if not self.allow_non_monotone and any(a > b for a, b in zip(self.probs, self.probs[1:])):
            out.append("non-monotone probability table")
        return out

    def lookup(self, delta: int) -> Fraction:
        """Base firing probability for a threshold distance ``delta``."""
        k, ls = self.k, self.boundaries
        if delta >= ls[-1]:
            return Fraction(1)
        if delta < -ls[-1]:
            return Fraction(0)
        if delta >= 0:
            j = next(j for j in range(1, k + 1) if delta < ls[j - 1])
            return self.probs[k + j - 1]
        j = next(j for j in range(1, k + 1) if delta >= -ls[j - 1])
        return self.probs[k - j]


@dataclass(frozen=True)
class NeuronParams:
    tau: int = 10
    r: Fraction = Fraction(7, 10)
    alpha: Fraction = Fraction(2, 25)
    arp: int = 2
    rrp: int = 5
    p_rest: int = 0
    p_min: int = -500
    p_max: int = 500
    table: SpikeProbabilityTable = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "r", as_fraction(self.r))
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        if self.table is None:
            object.__setattr__(self, "table", SpikeProbabilityTable.default(self.tau))

    def problems(self) -> list[str]:
        out = []
        if not self.p_min <= self.p_rest <= self.p_max:
            out.append("p_rest must lie within [p_min, p_max]")
        if not self.p_min <= self.tau <= self.p_max:
            out.append("threshold must lie within [p_min, p_max]")
        if not self.p_min <= 0 <= self.p_max:
            out.append("[p_min, p_max] must contain 0, the refractory potential")
        if not 0 <= self.r <= 1:
            out.append("leak must lie in [0, 1]")
        if not 0 <= self.alpha <= 1:
            out.append("alpha must lie in [0, 1]")
        if self.arp < 0 or self.rrp < 0:
            out.append("refractory periods must be nonnegative")
        return out + self.table.problems()


class NeuronState(NamedTuple):
    s: int = NORMAL
    y: int = 0
    p: int = 0
    aref: int = 0
    rref: int = 0


def rest_state(params: NeuronParams) -> NeuronState:
    return NeuronState(NORMAL, 0, params.p_rest, 0, 0)


def state_problems(state: NeuronState, params: NeuronParams) -> list[str]:
    out = []
    if state.s not in (NORMAL, ABSOLUTE, RELATIVE):
        out.append(f"bad period flag {state.s}")
    if state.y not in (0, 1):
        out.append("spike bit must be 0 or 1")
    if state.y == 1 and state.s != ABSOLUTE:
        out.append("a spiking step must enter absolute refractory")
    if not 0 <= state.aref <= params.arp:
        out.append("aref out of range")
    if not 0 <= state.rref <= params.rrp:
        out.append("rref out of range")
    if not params.p_min <= state.p <= params.p_max:
        out.append("potential out of bounds")
    return out


def clip_potential(raw, params: NeuronParams) -> int:
    return max(min(math.floor(raw), params.p_max), params.p_min)


def integrate(prev: NeuronState, weighted_input, params: NeuronParams) -> int:
    if prev.s == ABSOLUTE:
        raise ValueError("potential does not integrate during absolute refractory")
    if prev.y == 1:
        return clip_potential(weighted_input, params)
    return clip_potential(weighted_input + params.r * prev.p, params)


def base_spike_prob(p: int, params: NeuronParams) -> Fraction:
    return params.table.lookup(p - params.tau)


def effective_spike_prob(state: NeuronState, base: Fraction, params: NeuronParams) -> Fraction:
    if state.s == ABSOLUTE:
        return Fraction(0)
    if state.s == RELATIVE:
        return params.alpha * base
    return base


def spike_state(params: NeuronParams) -> NeuronState:
    return NeuronState(ABSOLUTE, 1, params.p_rest, params.arp, 0)


def neuron_branches(prev: NeuronState, weighted_input, params: NeuronParams) -> list[tuple[Fraction, NeuronState]]:
    """One-step distribution of a neuron as ``[(probability, next_state), ...]``.

    No-spike branch first, spike branch second; zero-probability branches are
    dropped so the list has one or two entries.
    """
    if prev.s == ABSOLUTE:
        if prev.aref > 0:
            return [(Fraction(1), NeuronState(ABSOLUTE, 0, 0, prev.aref - 1, prev.rref))]
        if params.rrp == 0:
            return [(Fraction(1), NeuronState(NORMAL, 0, 0, 0, 0))]
        return [(Fraction(1), NeuronState(RELATIVE, 0, 0, 0, params.rrp))]

    p_next = integrate(prev, weighted_input, params)
    q = effective_spike_prob(prev, base_spike_prob(p_next, params), params)
    if prev.s == RELATIVE and prev.rref > 0:
        quiet = NeuronState(RELATIVE, 0, p_next, 0, prev.rref - 1)
    else:
        quiet = NeuronState(NORMAL, 0, p_next, 0, 0)
    if q == 0:
        return [(Fraction(1), quiet)]
    if q == 1:
        return [(Fraction(1), spike_state(params))]
    return [(1 - q, quiet), (q, spike_state(params))]
