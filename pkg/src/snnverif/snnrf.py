"""SNN-RF network files: YAML parsing, validation and canonical serialization.

Layout::

    network:
      name: ci
      simulate: {steps: 100}
      inputs: [{id: 1, value: 1}]
      n_neurons:
        - {id: 1, threshold: 10, leak: 0.7}
      edges:
        - {from: {type: input, id: 1}, to: {type: neuron, id: 1}, weight: 11}
      properties: ["P>=1 [ G ((y1=1) -> (X (s1=1))) ]"]

Missing neuron keys take the model defaults.  Rational keys (``leak``,
``alpha``, table ``probs``) accept YAML numbers or strings such as ``"7/10"``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import yaml

from .network import INPUT, NEURON, EdgeSpec, InputSpec, NetworkSpec
from .neuron import NeuronParams, SpikeProbabilityTable, as_fraction

DEFAULT_STEPS = 100
_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)
_DEFAULT = NeuronParams()

TOP_KEYS = {"name", "simulate", "inputs", "n_neurons", "edges", "properties"}
NEURON_KEYS = {"id", "threshold", "leak", "alpha", "arp", "rrp", "p_rest", "p_min", "p_max", "prob_table"}
TABLE_KEYS = {"boundaries", "probs", "allow_non_monotone"}
EDGE_KEYS = {"from", "to", "weight"}
ENDPOINT_KEYS = {"type", "id"}

# neuron key -> NeuronParams field
_PARAM_FIELDS = {
    "threshold": "tau",
    "leak": "r",
    "alpha": "alpha",
    "arp": "arp",
    "rrp": "rrp",
    "p_rest": "p_rest",
    "p_min": "p_min",
    "p_max": "p_max",
}
_RATIONAL_KEYS = {"leak", "alpha"}


class SnnrfError(ValueError):
    """Parse failure carrying the document path and, when known, line and column (1-based)."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        at = f"{path}: " if path else ""
        super().__init__(f"{where}{at}{message}")


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self) -> list[str]:
        return [f"error: {p}: {m}" for p, m in self.errors] + [f"warning: {p}: {m}" for p, m in self.warnings]


# -- parsing ------------------------------------------------------------------

def _marks(node, path: str, out: dict) -> None:
    """Map document paths to the start mark of their YAML node."""
    out.setdefault(path, node.start_mark)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            if isinstance(key, yaml.ScalarNode):
                sub = f"{path}.{key.value}" if path else str(key.value)
                out.setdefault(sub, value.start_mark)
                _marks(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _marks(item, f"{path}[{i}]", out)


class _Reader:
    def __init__(self, marks: dict, strict: bool):
        self.marks = marks
        self.strict = strict
        self.warnings: list[tuple[str, str]] = []

    def fail(self, path: str, message: str):
        mark = None
        probe = path
        while probe and mark is None:
            mark = self.marks.get(probe)
            probe = probe.rsplit(".", 1)[0] if "." in probe else (probe.rsplit("[", 1)[0] if "[" in probe else "")
        if mark is None:
            raise SnnrfError(message, path)
        raise SnnrfError(message, path, mark.line + 1, mark.column + 1)

    def mapping(self, value, path: str, allowed: set[str]) -> dict:
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {_kind(value)}")
        for key in value:
            if not isinstance(key, str):
                self.fail(path, f"keys must be strings, got {key!r}")
            if key not in allowed:
                message = f"unknown key {key!r}"
                if self.strict:
                    self.fail(f"{path}.{key}", message)
                self.warnings.append((f"{path}.{key}", message))
        return value

    def sequence(self, value, path: str) -> list:
        if value is None:
            return []
        if not isinstance(value, list):
            self.fail(path, f"expected a list, got {_kind(value)}")
        return value

    def integer(self, value, path: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {_kind(value)}")
        return value

    def rational(self, value, path: str) -> Fraction:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            self.fail(path, f"expected a number, got {_kind(value)}")
        try:
            return as_fraction(value)
        except (ValueError, ZeroDivisionError, TypeError):
            self.fail(path, f"not a finite rational number: {value!r}")

    def text(self, value, path: str) -> str:
        if not isinstance(value, str):
            self.fail(path, f"expected a string, got {_kind(value)}")
        return value


def _kind(value: Any) -> str:
    if value is None:
        return "null"
    return {dict: "mapping", list: "list", str: "string", bool: "boolean"}.get(type(value), type(value).__name__)


def read_snnrf(text: str, strict: bool = True) -> tuple[NetworkSpec, list[tuple[str, str]]]:
    """Parse a document into a spec plus lax-mode warnings.

    Raises :class:`SnnrfError` on any syntax, structure or type problem.
    Semantic checks (unique ids, endpoints, table shape) belong to :func:`validate`.
    """
    try:
        loader = _Loader(text)
        try:
            node = loader.get_single_node()
            data = loader.construct_document(node) if node is not None else None
        finally:
            loader.dispose()
        marks: dict = {}
        if node is not None:
            _marks(node, "", marks)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        message = exc.problem or str(exc)
        if mark is None:
            raise SnnrfError(f"YAML syntax error: {message}") from None
        raise SnnrfError(f"YAML syntax error: {message}", "", mark.line + 1, mark.column + 1) from None
    except (yaml.YAMLError, ValueError, TypeError, RecursionError, OverflowError) as exc:
        raise SnnrfError(f"YAML syntax error: {exc}") from None

    rd = _Reader(marks, strict)

    if not isinstance(data, dict) or "network" not in data:
        rd.fail("", "document must be a mapping with a top-level 'network' key")
    rd.mapping(data, "", {"network"})
    net = rd.mapping(data["network"], "network", TOP_KEYS)

    name = rd.text(net.get("name", "network"), "network.name")
    steps = DEFAULT_STEPS
    if "simulate" in net:
        sim = rd.mapping(net["simulate"], "network.simulate", {"steps"})
        if "steps" in sim:
            steps = rd.integer(sim["steps"], "network.simulate.steps")

    inputs = []
    for i, raw in enumerate(rd.sequence(net.get("inputs"), "network.inputs")):
        path = f"network.inputs[{i}]"
        item = rd.mapping(raw, path, {"id", "value"})
        if "id" not in item:
            rd.fail(path, "input needs an 'id'")
        value = item.get("value", 1)
        if isinstance(value, list):
            if not value:
                rd.fail(f"{path}.value", "input pattern must not be empty")
            value = tuple(rd.integer(v, f"{path}.value[{j}]") for j, v in enumerate(value))
        else:
            value = rd.integer(value, f"{path}.value")
        inputs.append(InputSpec(rd.integer(item["id"], f"{path}.id"), value))

    neurons = []
    for i, raw in enumerate(rd.sequence(net.get("n_neurons"), "network.n_neurons")):
        neurons.append(_read_neuron(rd, raw, f"network.n_neurons[{i}]"))

    edges = []
    for i, raw in enumerate(rd.sequence(net.get("edges"), "network.edges")):
        path = f"network.edges[{i}]"
        item = rd.mapping(raw, path, EDGE_KEYS)
        for key in EDGE_KEYS:
            if key not in item:
                rd.fail(path, f"edge needs '{key}'")
        src_kind, src = _read_endpoint(rd, item["from"], f"{path}.from", (INPUT, NEURON))
        _, dst = _read_endpoint(rd, item["to"], f"{path}.to", (NEURON,))
        edges.append(EdgeSpec(src_kind, src, dst, rd.integer(item["weight"], f"{path}.weight")))

    props = tuple(
        rd.text(p, f"network.properties[{i}]")
        for i, p in enumerate(rd.sequence(net.get("properties"), "network.properties"))
    )
    spec = NetworkSpec(name, steps, tuple(inputs), tuple(neurons), tuple(edges), props)
    return spec, rd.warnings


def _read_endpoint(rd: _Reader, raw, path: str, kinds: tuple[str, ...]) -> tuple[str, int]:
    item = rd.mapping(raw, path, ENDPOINT_KEYS)
    if "type" not in item or "id" not in item:
        rd.fail(path, "endpoint needs 'type' and 'id'")
    kind = rd.text(item["type"], f"{path}.type")
    if kind not in kinds:
        rd.fail(f"{path}.type", f"endpoint type must be one of {', '.join(kinds)}, got {kind!r}")
    return kind, rd.integer(item["id"], f"{path}.id")


def _read_neuron(rd: _Reader, raw, path: str) -> tuple[int, NeuronParams]:
    item = rd.mapping(raw, path, NEURON_KEYS)
    if "id" not in item:
        rd.fail(path, "neuron needs an 'id'")
    nid = rd.integer(item["id"], f"{path}.id")
    kwargs = {}
    for key, attr in _PARAM_FIELDS.items():
        if key in item:
            read = rd.rational if key in _RATIONAL_KEYS else rd.integer
            kwargs[attr] = read(item[key], f"{path}.{key}")
    if "prob_table" in item:
        tpath = f"{path}.prob_table"
        table = rd.mapping(item["prob_table"], tpath, TABLE_KEYS)
        if "boundaries" not in table or "probs" not in table:
            rd.fail(tpath, "prob_table needs 'boundaries' and 'probs'")
        bounds = tuple(
            rd.integer(b, f"{tpath}.boundaries[{j}]")
            for j, b in enumerate(rd.sequence(table["boundaries"], f"{tpath}.boundaries"))
        )
        probs = tuple(
            rd.rational(q, f"{tpath}.probs[{j}]")
            for j, q in enumerate(rd.sequence(table["probs"], f"{tpath}.probs"))
        )
        lax = table.get("allow_non_monotone", False)
        if not isinstance(lax, bool):
            rd.fail(f"{tpath}.allow_non_monotone", "expected true or false")
        kwargs["table"] = SpikeProbabilityTable(bounds, probs, lax)
    return nid, NeuronParams(**kwargs)


def parse_snnrf(text: str, strict: bool = True) -> NetworkSpec:
    return read_snnrf(text, strict)[0]


def load_snnrf(path, strict: bool = True) -> tuple[NetworkSpec, list[tuple[str, str]]]:
    with open(path, encoding="utf-8") as fh:
        return read_snnrf(fh.read(), strict)


# -- validation -----------------------------------------------------------------

def _duplicates(values) -> list:
    seen, dup = set(), []
    for v in values:
        if v in seen and v not in dup:
            dup.append(v)
        seen.add(v)
    return dup


def validate(spec: NetworkSpec) -> ValidationReport:
    report = ValidationReport()
    err = report.errors.append
    warn = report.warnings.append

    if spec.steps < 0:
        err(("network.simulate.steps", "steps must be nonnegative"))
    if not spec.neurons:
        err(("network.n_neurons", "network has no neurons"))
    for nid in _duplicates(i.id for i in spec.inputs):
        err(("network.inputs", f"duplicate input id {nid}"))
    for nid in _duplicates(nid for nid, _ in spec.neurons):
        err(("network.n_neurons", f"duplicate neuron id {nid}"))

    for i, (nid, params) in enumerate(spec.neurons):
        path = f"network.n_neurons[{i}]"
        for problem in params.problems():
            err((path, problem))
        bounds = (params.p_min, params.p_max)
        if bounds != (_DEFAULT.p_min, _DEFAULT.p_max) and params.p_max - params.p_min > _DEFAULT.p_max - _DEFAULT.p_min:
            warn((path, f"potential range [{params.p_min}, {params.p_max}] is wider than the default and may explode the state space"))

    input_ids = {i.id for i in spec.inputs}
    neuron_ids = {nid for nid, _ in spec.neurons}
    connected = set()
    for i, e in enumerate(spec.edges):
        path = f"network.edges[{i}]"
        known = input_ids if e.src_kind == INPUT else neuron_ids
        if e.src not in known:
            err((f"{path}.from", f"unknown endpoint {e.src_kind} {e.src}"))
        if e.dst not in neuron_ids:
            err((f"{path}.to", f"unknown endpoint neuron {e.dst}"))
        connected.add(e.dst)
        if e.src_kind == NEURON:
            connected.add(e.src)
    for pair in _duplicates((e.src_kind, e.src, e.dst) for e in spec.edges):
        err(("network.edges", f"duplicate edge from {pair[0]} {pair[1]} to neuron {pair[2]}"))
    for nid in sorted(neuron_ids - connected):
        warn(("network.n_neurons", f"neuron {nid} is disconnected"))

    if report.ok:
        _validate_properties(spec, report)
    return report


def _validate_properties(spec: NetworkSpec, report: ValidationReport) -> None:
    from .pctl.formula import FormulaSyntaxError, neurons_referenced, parse_formula

    for i, text in enumerate(spec.properties):
        path = f"network.properties[{i}]"
        try:
            unknown = neurons_referenced(parse_formula(text)) - set(spec.index_of)
        except FormulaSyntaxError as exc:
            report.errors.append((path, str(exc)))
            continue
        if unknown:
            report.errors.append((path, f"property references unknown neuron(s) {sorted(unknown)}"))


# -- serialization ----------------------------------------------------------------

def _number(q: Fraction):
    if q.denominator == 1:
        return q.numerator
    f = float(q)
    if Fraction(repr(f)) == q:
        return f
    return f"{q.numerator}/{q.denominator}"


def _neuron_doc(nid: int, params: NeuronParams) -> dict:
    doc: dict = {"id": nid}
    for key, attr in _PARAM_FIELDS.items():
        value = getattr(params, attr)
        doc[key] = _number(value) if key in _RATIONAL_KEYS else value
    if params.table != SpikeProbabilityTable.default(params.tau):
        table: dict = {
            "boundaries": list(params.table.boundaries),
            "probs": [_number(q) for q in params.table.probs],
        }
        if params.table.allow_non_monotone:
            table["allow_non_monotone"] = True
        doc["prob_table"] = table
    return doc


def to_document(spec: NetworkSpec) -> dict:
    net: dict = {
        "name": spec.name,
        "simulate": {"steps": spec.steps},
        "inputs": [
            {"id": i.id, "value": list(i.value) if isinstance(i.value, tuple) else i.value}
            for i in spec.inputs
        ],
        "n_neurons": [_neuron_doc(nid, params) for nid, params in spec.neurons],
        "edges": [
            {"from": {"type": e.src_kind, "id": e.src}, "to": {"type": NEURON, "id": e.dst}, "weight": e.weight}
            for e in spec.edges
        ],
    }
    if spec.properties:
        net["properties"] = _BlockList(spec.properties)
    return {"network": net}


class _BlockList(list):
    pass


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(
    _BlockList, lambda dumper, data: dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=False)
)


def serialize(spec: NetworkSpec) -> str:
    """Canonical document; ``parse_snnrf(serialize(s)) == s`` for valid specs."""
    return yaml.dump(
        to_document(spec), Dumper=_Dumper, sort_keys=False, default_flow_style=None, allow_unicode=True, width=4096
    )
