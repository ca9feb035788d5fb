"""PRISM model and property text generated from a network spec.

The model has one ``Input`` module, one ``Neuron<id>`` module per neuron and
every command synchronises on the single action ``[to]``, so a PRISM step is
one network step.  Synapses between neurons are emitted as ``transfer_<src>_<dst>``
formulas that read the presynaptic ``y`` of the current state; since every
module updates from the current state, this already realises the one-step
delay.  The spike decision is single-phase: the spike branch itself sets
``s'=1``, ``y'=1``, ``aref'=ARP`` and ``p'=P_rest``.
"""
from __future__ import annotations

import re
import shutil
import subprocess
from fractions import Fraction
from typing import Iterable, Optional

from .network import INPUT, NetworkSpec
from .neuron import NeuronParams
from .pctl.formula import (
    And,
    BoolConst,
    Cmp,
    Const,
    Finally,
    Globally,
    GloballyAfter,
    Implies,
    Next,
    Not,
    Num,
    Or,
    Prob,
    Reward,
    Until,
    Var,
    neurons_referenced,
    parse_formula,
)
from .pctl.states import UnknownName, resolve_constant

ACTION = "to"


class PrismGenError(ValueError):
    pass


def decimal(q: Fraction) -> str:
    """Exact decimal text of a rational, or ``a/b`` when the expansion does not terminate."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d, twos, fives = q.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    scaled = abs(q.numerator) * 10**places // q.denominator
    digits = str(scaled).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}".rstrip("0")
    return ("-" if q < 0 else "") + text


def _intervals(params: NeuronParams) -> list[tuple[Optional[int], Optional[int], Fraction]]:
    """``(lo, hi, base)`` over threshold distance: ``lo <= d < hi`` (open ends are None)."""
    ls, probs, k = params.table.boundaries, params.table.probs, params.table.k
    out: list[tuple[Optional[int], Optional[int], Fraction]] = [(None, -ls[-1], Fraction(0))]
    for j in range(k, 0, -1):
        lo, hi = -ls[j - 1], (-ls[j - 2] if j > 1 else 0)
        out.append((lo, hi, probs[k - j]))
    for j in range(1, k + 1):
        lo = ls[j - 2] if j > 1 else 0
        out.append((lo, ls[j - 1], probs[k + j - 1]))
    out.append((ls[-1], None, Fraction(1)))
    return out


def _check_ranges(spec: NetworkSpec) -> None:
    for nid, params in spec.ordered_neurons:
        problems = params.problems()
        if params.p_min > params.p_max:
            problems.append("p_min exceeds p_max")
        if problems:
            raise PrismGenError(f"neuron {nid}: {'; '.join(problems)}")


def _input_module(spec: NetworkSpec) -> list[str]:
    lines = ["module Input"]
    if not spec.inputs:
        lines += ["  idle : bool init true;", "", f"  [{ACTION}] true -> (idle'=true);", "endmodule"]
        return lines
    period = spec.period
    if period > 1:
        lines.append(f"  phase : [0..{period - 1}] init 0;")
    updates = []
    for inp in sorted(spec.inputs, key=lambda i: i.id):
        pat = inp.pattern
        lo, hi = min(pat), max(pat)
        lines.append(f"  x{inp.id} : [{lo}..{hi}] init {pat[0]};")
        if len(set(pat)) == 1:
            updates.append(f"(x{inp.id}'=x{inp.id})")
        else:
            nxt = " : ".join(f"phase={ph} ? {inp.at(ph + 1)}" for ph in range(period - 1)) + f" : {inp.at(period)}"
            updates.append(f"(x{inp.id}'=({nxt}))")
    if period > 1:
        updates.insert(0, f"(phase'=mod(phase+1, {period}))")
    lines += ["", f"  [{ACTION}] true -> {' & '.join(updates)};", "endmodule"]
    return lines


def _neuron_module(spec: NetworkSpec, nid: int, params: NeuronParams) -> list[str]:
    i = nid
    lines = [
        f"module Neuron{i}",
        f"  s{i} : [0..2] init 0;",
        f"  y{i} : [0..1] init 0;",
        f"  p{i} : [MIN_{i}..MAX_{i}] init P_rest_{i};",
        f"  aref{i} : [0..ARP_{i}] init 0;",
        f"  rref{i} : [0..RRP_{i}] init 0;",
        "",
    ]
    spike = f"(s{i}'=1) & (y{i}'=1) & (p{i}'=P_rest_{i}) & (aref{i}'=ARP_{i}) & (rref{i}'=0)"
    if params.arp > 0:
        lines.append(f"  [{ACTION}] s{i}=1 & aref{i}>0 -> (y{i}'=0) & (p{i}'=0) & (aref{i}'=aref{i}-1);")
    if params.rrp > 0:
        lines.append(f"  [{ACTION}] s{i}=1 & aref{i}=0 -> (s{i}'=2) & (y{i}'=0) & (p{i}'=0) & (rref{i}'=RRP_{i});")
    else:
        lines.append(f"  [{ACTION}] s{i}=1 & aref{i}=0 -> (s{i}'=0) & (y{i}'=0) & (p{i}'=0);")

    modes = [(f"s{i}=0", f"(y{i}'=0) & (p{i}'=np{i})", Fraction(1))]
    if params.rrp > 0:
        modes.append((f"s{i}=2 & rref{i}>0", f"(y{i}'=0) & (p{i}'=np{i}) & (rref{i}'=rref{i}-1)", params.alpha))
    modes.append((f"s{i}=2 & rref{i}=0", f"(s{i}'=0) & (y{i}'=0) & (p{i}'=np{i})", params.alpha))

    for guard, quiet, scale in modes:
        lines.append("")
        for lo, hi, base in _intervals(params):
            cond = [guard]
            if lo is not None:
                cond.append(f"np{i}-threshold_{i}>={lo}")
            if hi is not None:
                cond.append(f"np{i}-threshold_{i}<{hi}")
            q = scale * base
            if q == 0:
                body = quiet
            elif q == 1:
                body = spike
            else:
                body = f"{decimal(1 - q)} : {quiet} + {decimal(q)} : {spike}"
            lines.append(f"  [{ACTION}] {' & '.join(cond)} -> {body};")
    lines.append("endmodule")
    return lines


def emit_model(spec: NetworkSpec) -> str:
    """PRISM ``dtmc`` text; deterministic for a given spec."""
    _check_ranges(spec)
    out = [f"// network {spec.name}: RP-LI&F neurons, one synchronous step per [{ACTION}]", "dtmc", ""]

    for nid, params in spec.ordered_neurons:
        out.append(f"// neuron {nid}")
        out += [
            f"const int threshold_{nid} = {params.tau};",
            f"const int P_rest_{nid} = {params.p_rest};",
            f"const int MIN_{nid} = {params.p_min};",
            f"const int MAX_{nid} = {params.p_max};",
            f"const int ARP_{nid} = {params.arp};",
            f"const int RRP_{nid} = {params.rrp};",
            f"const double r_{nid} = {decimal(params.r)};",
            f"const double alpha_{nid} = {decimal(params.alpha)};",
        ]
        ls = params.table.boundaries
        levels = [params.tau + d for d in [-b for b in reversed(ls)] + [0] + list(ls)]
        out += [f"const int threshold_{nid}_{j} = {v};" for j, v in enumerate(levels)]
        out.append("")

    out += _input_module(spec)
    out.append("")

    # transfer synapses and integrated potentials
    for e in sorted(spec.edges, key=lambda e: (e.dst, e.src_kind != INPUT, e.src)):
        if e.src_kind != INPUT:
            out.append(f"formula transfer_{e.src}_{e.dst} = y{e.src};")
    for nid, params in spec.ordered_neurons:
        terms = []
        for e in sorted(spec.edges, key=lambda e: (e.src_kind != INPUT, e.src)):
            if e.dst != nid:
                continue
            signal = f"x{e.src}" if e.src_kind == INPUT else f"transfer_{e.src}_{nid}"
            terms.append(f"{e.weight}*{signal}")
        out.append(f"formula in{nid} = {' + '.join(terms) if terms else '0'};")
        num, den = params.r.numerator, params.r.denominator
        leak = f"(y{nid}=1 ? 0 : {num}*p{nid})"
        out.append(
            f"formula np{nid} = s{nid}=1 ? 0 : "
            f"max(MIN_{nid}, min(MAX_{nid}, floor(({den}*in{nid} + {leak})/{den})));"
        )
    out.append("")

    for nid, params in spec.ordered_neurons:
        out += _neuron_module(spec, nid, params)
        out.append("")

    for nid in spec.neuron_ids:
        out += [f'rewards "spike{nid}_count"', f"  y{nid}=1 : 1;", "endrewards", ""]
    return "\n".join(out)


# -- properties ---------------------------------------------------------------------

def _term(t, context: Optional[int], spec: NetworkSpec) -> str:
    if isinstance(t, Num):
        return decimal(t.value)
    if isinstance(t, Var):
        return str(t)
    if isinstance(t, Const):
        return decimal(resolve_constant(t.name, context, spec))
    raise TypeError(t)


def prism_formula(f, spec: NetworkSpec) -> str:
    """PRISM text of a parsed property; named constants become their values."""
    if isinstance(f, Prob):
        head = "P=?" if f.is_query else f"P{f.op}{decimal(f.bound)}"
        return f"{head} [ {prism_formula(f.path, spec)} ]"
    if isinstance(f, Reward):
        return str(f)
    if isinstance(f, Cmp):
        context = next((t.neuron for t in (f.left, f.right) if isinstance(t, Var)), None)
        return f"{_term(f.left, context, spec)}{f.op}{_term(f.right, context, spec)}"
    if isinstance(f, BoolConst):
        return str(f)
    if isinstance(f, Not):
        return f"!({prism_formula(f.arg, spec)})"
    if isinstance(f, (And, Or, Implies)):
        op = {And: "&", Or: "|", Implies: "=>"}[type(f)]
        return f"({prism_formula(f.left, spec)}) {op} ({prism_formula(f.right, spec)})"
    if isinstance(f, Next):
        return f"X ({prism_formula(f.arg, spec)})"
    if isinstance(f, (Finally, Globally)):
        name = "F" if isinstance(f, Finally) else "G"
        b = "" if f.bound is None else f"<={f.bound}"
        return f"{name}{b} ({prism_formula(f.arg, spec)})"
    if isinstance(f, GloballyAfter):
        return f"G>{f.after} ({prism_formula(f.arg, spec)})"
    if isinstance(f, Until):
        b = "" if f.bound is None else f"<={f.bound}"
        return f"({prism_formula(f.left, spec)}) U{b} ({prism_formula(f.right, spec)})"
    raise TypeError(f"unexpected node {f!r}")


def emit_properties(spec: NetworkSpec, formulas: Iterable) -> str:
    lines = []
    for f in formulas:
        if isinstance(f, str):
            f = parse_formula(f)
        unknown = neurons_referenced(f) - set(spec.index_of)
        if unknown:
            raise UnknownName(f"property references unknown neuron(s) {sorted(unknown)}")
        lines.append(prism_formula(f, spec))
    return "".join(line + "\n" for line in lines)


def safe_name(name: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9_.-]+", "_", name.strip()).strip("._")
    return cleaned or "network"


# -- minimal grammar check ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s+|//[^\n]*|(?P<num>\d+\.\d+|\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*'?)|(?P<str>\"[^\"]*\")"
    r"|(?P<op>\.\.|<=|>=|!=|=>|->|[\[\]();:+\-*/=<>&|!?,])"
)
_BUILTINS = {"min", "max", "floor", "ceil", "mod", "pow"}


class PrismSyntaxError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PrismSyntaxError(f"bad character {text[pos]!r} at offset {pos}")
        if m.lastgroup:
            out.append(m.group())
        pos = m.end()
    return out


class _Grammar:
    """Recursive-descent recogniser for the PRISM subset this module emits."""

    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0
        self.names: set[str] = set()

    def peek(self, k: int = 0) -> str:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else ""

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if not tok or (expected is not None and tok != expected):
            raise PrismSyntaxError(f"expected {expected or 'a token'}, found {tok or 'end of input'!r} (token {self.i})")
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise PrismSyntaxError(f"expected an identifier, found {tok!r}")
        return tok

    def model(self) -> None:
        self.take("dtmc")
        while self.peek():
            head = self.peek()
            if head == "const":
                self.take()
                if self.peek() in ("int", "double", "bool"):
                    self.take()
                name = self.ident()
                self.take("=")
                self.expr()
                self.take(";")
                self.names.add(name)
            elif head == "formula":
                self.take()
                name = self.ident()
                self.take("=")
                self.names.add(name)
                self.expr()
                self.take(";")
            elif head == "module":
                self.module()
            elif head == "rewards":
                self.take()
                if not self.peek().startswith('"'):
                    raise PrismSyntaxError("reward structure needs a quoted name")
                self.take()
                while self.peek() != "endrewards":
                    self.expr()
                    self.take(":")
                    self.expr()
                    self.take(";")
                self.take("endrewards")
            else:
                raise PrismSyntaxError(f"unexpected {head!r} at top level")

    def module(self) -> None:
        self.take("module")
        self.ident()
        while self.peek(1) == ":":
            self.names.add(self.ident())
            self.take(":")
            if self.peek() == "bool":
                self.take()
            else:
                self.take("[")
                self.expr()
                self.take("..")
                self.expr()
                self.take("]")
            self.take("init")
            self.expr()
            self.take(";")
        while self.peek() == "[":
            self.take("[")
            if self.peek() != "]":
                self.ident()
            self.take("]")
            self.expr()
            self.take("->")
            self.updates()
            self.take(";")
        self.take("endmodule")

    def updates(self) -> None:
        while True:
            if self.peek() == "(" or self.peek() == "true":
                self.assignments()
            else:
                self.expr()
                self.take(":")
                self.assignments()
            if self.peek() != "+":
                return
            self.take("+")

    def assignments(self) -> None:
        if self.peek() == "true":
            self.take()
            return
        while True:
            self.take("(")
            target = self.take()
            if not target.endswith("'") or target[:-1] not in self.names:
                raise PrismSyntaxError(f"bad update target {target!r}")
            self.take("=")
            self.expr()
            self.take(")")
            if self.peek() != "&":
                return
            self.take("&")

    # expressions: ?: < => < | < & < ! < relational < additive < multiplicative < unary
    def expr(self) -> None:
        self.implication()
        if self.peek() == "?":
            self.take()
            self.expr()
            self.take(":")
            self.expr()

    def implication(self) -> None:
        self.disjunction()
        while self.peek() == "=>":
            self.take()
            self.disjunction()

    def disjunction(self) -> None:
        self.conjunction()
        while self.peek() == "|":
            self.take()
            self.conjunction()

    def conjunction(self) -> None:
        self.negation()
        while self.peek() == "&":
            self.take()
            self.negation()

    def negation(self) -> None:
        if self.peek() == "!":
            self.take()
            self.negation()
            return
        self.relation()

    def relation(self) -> None:
        self.additive()
        if self.peek() in ("=", "!=", "<", "<=", ">", ">="):
            self.take()
            self.additive()

    def additive(self) -> None:
        self.multiplicative()
        while self.peek() in ("+", "-"):
            # a '+' followed by a probability update belongs to the command, not the expression
            if self.peek() == "+" and self._update_follows():
                return
            self.take()
            self.multiplicative()

    def _update_follows(self) -> bool:
        j = self.i + 1
        depth = 0
        while j < len(self.toks):
            tok = self.toks[j]
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth < 0:
                    return False
            elif depth == 0 and tok in (":", ";", "+"):
                return tok == ":"
            j += 1
        return False

    def multiplicative(self) -> None:
        self.unary()
        while self.peek() in ("*", "/"):
            self.take()
            self.unary()

    def unary(self) -> None:
        tok = self.peek()
        if tok == "-":
            self.take()
            self.unary()
        elif tok == "(":
            self.take()
            self.expr()
            self.take(")")
        elif tok in _BUILTINS and self.peek(1) == "(":
            self.take()
            self.take("(")
            self.expr()
            while self.peek() == ",":
                self.take()
                self.expr()
            self.take(")")
        elif re.fullmatch(r"\d+(\.\d+)?", tok or "x"):
            self.take()
        elif tok in ("true", "false"):
            self.take()
        else:
            name = self.ident()
            if name not in self.names:
                raise PrismSyntaxError(f"undeclared identifier {name!r}")


def check_model_syntax(text: str) -> None:
    """Raise :class:`PrismSyntaxError` unless ``text`` fits the emitted PRISM subset.

    Every identifier used in an expression must be declared somewhere in the
    file, as PRISM resolves names globally.
    """
    grammar = _Grammar(text)
    grammar.names = _declared(text)
    grammar.model()


def _declared(text: str) -> set[str]:
    names = set(re.findall(r"\b(?:const\s+(?:int|double|bool)\s+|formula\s+)([A-Za-z_]\w*)", text))
    names |= set(re.findall(r"^\s*([A-Za-z_]\w*)\s*:\s*(?:\[|bool)", text, re.M))
    return names


def run_prism(model_path, props_path, executable: str = "prism", timeout: float = 600) -> Optional[str]:
    """Run a PRISM executable on emitted files; None when it is not installed."""
    exe = shutil.which(executable)
    if exe is None:
        return None
    done = subprocess.run(
        [exe, str(model_path), str(props_path)], capture_output=True, text=True, timeout=timeout, check=False
    )
    if done.returncode != 0:
        raise RuntimeError(f"prism failed ({done.returncode}): {done.stderr.strip() or done.stdout[-2000:]}")
    return done.stdout


def parse_prism_results(output: str) -> list[str]:
    """``Result: ...`` values from PRISM's console output, in property order."""
    return [m.group(1).split()[0] for m in re.finditer(r"^Result:\s*(.+)$", output, re.M)]
