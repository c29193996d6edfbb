"""Closed-circuit construction, validation, foliation, and evaluation.

A circuit is a DAG of gate instances joined by typed wires. Evaluation
slices the DAG into layers of parallel gates (a foliation) and multiplies
the layer matrices; the identity blocks for wires passing through a layer
come from the owning theory's composite rule, so theories without a tensor
product composite still evaluate correctly. Circuits are immutable once
validated, and prob() on a shared circuit is safe to call concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .core import SystemType, TransformationMatrix
from .errors import CapacityError, CircuitValidationError, GptLabError

DEFAULT_ENUMERATION_CAP = 2**20


@dataclass(frozen=True, eq=False)
class Gate:
    """A device: one transformation matrix per classical outcome.

    Preparations have no inputs, effects no outputs; the matrices of all
    outcomes share one shape.
    """

    name: str
    inputs: tuple[SystemType, ...]
    outputs: tuple[SystemType, ...]
    outcomes: Mapping[str, TransformationMatrix]

    def __post_init__(self) -> None:
        if not self.outcomes:
            raise ValueError(f"gate '{self.name}' must have at least one outcome")
        shapes = {t.matrix.shape for t in self.outcomes.values()}
        if len(shapes) != 1:
            raise ValueError(f"gate '{self.name}' outcome matrices disagree on shape")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "outcomes", dict(self.outcomes))

    @property
    def outcome_labels(self) -> tuple[str, ...]:
        return tuple(self.outcomes)


Port = tuple[str, int]


@dataclass(frozen=True)
class Wire:
    src: Port  # (instance id, output port index)
    dst: Port  # (instance id, input port index)


@dataclass(frozen=True)
class OutcomeString:
    """One outcome label per gate instance, in circuit order."""

    pairs: tuple[tuple[str, str], ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)

    def label(self, instance_id: str) -> str:
        for iid, lab in self.pairs:
            if iid == instance_id:
                return lab
        raise KeyError(instance_id)

    def __str__(self) -> str:
        return ",".join(f"{i}={l}" for i, l in self.pairs)


class CircuitDAG:
    """A closed circuit over a fixed theory.

    Build with :meth:`add` and :meth:`connect`; evaluation functions validate
    on entry. The ``theory`` argument is any object exposing a
    ``composite_rule`` attribute (a :class:`~gptlab.core.CompositeRule`).
    """

    def __init__(self, theory):
        self.theory = theory
        self.instances: list[tuple[str, Gate]] = []
        self.wires: list[Wire] = []
        self._ids: dict[str, Gate] = {}

    def add(self, instance_id: str, gate: Gate) -> str:
        if instance_id in self._ids:
            raise ValueError(f"duplicate instance id '{instance_id}'")
        self._ids[instance_id] = gate
        self.instances.append((instance_id, gate))
        return instance_id

    def connect(self, src: Port, dst: Port) -> None:
        self.wires.append(Wire(tuple(src), tuple(dst)))

    def gate(self, instance_id: str) -> Gate:
        return self._ids[instance_id]

    @property
    def instance_ids(self) -> list[str]:
        return [iid for iid, _ in self.instances]

    def outcome_string(self, assignment: Mapping[str, str]) -> OutcomeString:
        """Normalize a mapping instance->label into circuit order."""
        pairs = []
        for iid, gate in self.instances:
            if iid not in assignment:
                raise GptLabError(f"outcome string missing instance '{iid}'")
            lab = assignment[iid]
            if lab not in gate.outcomes:
                raise GptLabError(f"instance '{iid}' has no outcome '{lab}'")
            pairs.append((iid, lab))
        return OutcomeString(tuple(pairs))

    def n_outcome_strings(self) -> int:
        n = 1
        for _, gate in self.instances:
            n *= len(gate.outcomes)
        return n


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str]

    def __bool__(self) -> bool:
        return self.ok


def validate(circuit: CircuitDAG) -> ValidationReport:
    """Check that the circuit is closed, acyclic, and type-matched.

    Never raises; every violation found is listed in the report.
    """
    errors: list[str] = []
    ids = {iid for iid, _ in circuit.instances}

    out_seen: dict[Port, int] = {}
    in_seen: dict[Port, int] = {}
    for w in circuit.wires:
        for end, role, seen in ((w.src, "source", out_seen), (w.dst, "target", in_seen)):
            iid, port = end
            if iid not in ids:
                errors.append(f"wire {role} references unknown instance '{iid}'")
                continue
            gate = circuit.gate(iid)
            ports = gate.outputs if role == "source" else gate.inputs
            if not (0 <= port < len(ports)):
                errors.append(f"wire {role} ('{iid}', {port}): port index out of range")
                continue
            seen[end] = seen.get(end, 0) + 1

    for iid, gate in circuit.instances:
        for p in range(len(gate.outputs)):
            count = out_seen.get((iid, p), 0)
            if count == 0:
                errors.append(f"open port: output {p} of '{iid}' is not connected")
            elif count > 1:
                errors.append(f"output {p} of '{iid}' connected {count} times")
        for p in range(len(gate.inputs)):
            count = in_seen.get((iid, p), 0)
            if count == 0:
                errors.append(f"open port: input {p} of '{iid}' is not connected")
            elif count > 1:
                errors.append(f"input {p} of '{iid}' connected {count} times")

    for w in circuit.wires:
        (si, sp), (di, dp) = w.src, w.dst
        if si in ids and di in ids:
            sg, dg = circuit.gate(si), circuit.gate(di)
            if sp < len(sg.outputs) and dp < len(dg.inputs):
                if sg.outputs[sp] != dg.inputs[dp]:
                    errors.append(
                        f"type mismatch on wire ('{si}',{sp})->('{di}',{dp}): "
                        f"{sg.outputs[sp].label} vs {dg.inputs[dp].label}"
                    )

    # Kahn's algorithm over the instance dependency graph.
    succ: dict[str, set[str]] = {iid: set() for iid in ids}
    indeg: dict[str, int] = {iid: 0 for iid in ids}
    for w in circuit.wires:
        si, di = w.src[0], w.dst[0]
        if si in ids and di in ids and di not in succ[si]:
            succ[si].add(di)
            indeg[di] += 1
    ready = [iid for iid, _ in circuit.instances if indeg[iid] == 0]
    done = 0
    while ready:
        iid = ready.pop()
        done += 1
        for nxt in succ[iid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    if done != len(ids):
        stuck = sorted(iid for iid in ids if indeg[iid] > 0)
        errors.append(f"cycle detected involving instances {stuck}")

    return ValidationReport(not errors, errors)


def foliate(circuit: CircuitDAG, style: str = "greedy") -> list[list[str]]:
    """Slice the circuit into an ordered list of antichain layers.

    ``greedy`` takes all simultaneously-ready gates per layer; ``singletons``
    emits one gate per layer in topological order. Both are legal foliations
    and give identical outcome probabilities.
    """
    report = validate(circuit)
    if not report.ok:
        raise CircuitValidationError("; ".join(report.errors))
    order = {iid: k for k, (iid, _) in enumerate(circuit.instances)}
    succ: dict[str, set[str]] = {iid: set() for iid in order}
    indeg: dict[str, int] = {iid: 0 for iid in order}
    for w in circuit.wires:
        si, di = w.src[0], w.dst[0]
        if di not in succ[si]:
            succ[si].add(di)
            indeg[di] += 1
    ready = sorted((iid for iid in order if indeg[iid] == 0), key=order.get)
    layers: list[list[str]] = []
    while ready:
        if style == "greedy":
            layer = ready
        elif style == "singletons":
            layer = [ready[0]]
        else:
            raise ValueError(f"unknown foliation style '{style}'")
        next_ready = ready[len(layer):]
        for iid in layer:
            for nxt in succ[iid]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    next_ready.append(nxt)
        layers.append(list(layer))
        ready = sorted(next_ready, key=order.get)
    return layers


@dataclass
class _Layer:
    gate_ids: list[str]
    perm: np.ndarray | None  # applied before the layer matrices; None = identity
    combos: dict[tuple[str, ...], np.ndarray]  # outcome labels per gate -> matrix


def _check_foliation(circuit: CircuitDAG, layers: list[list[str]]) -> None:
    seen: dict[str, int] = {}
    for k, layer in enumerate(layers):
        for iid in layer:
            if iid in seen:
                raise CircuitValidationError(f"instance '{iid}' appears in two layers")
            seen[iid] = k
    if set(seen) != set(circuit.instance_ids):
        raise CircuitValidationError("foliation does not cover every instance exactly once")
    for w in circuit.wires:
        if seen[w.src[0]] >= seen[w.dst[0]]:
            raise CircuitValidationError(
                f"foliation violates wire order ('{w.src[0]}' before '{w.dst[0]}')"
            )


def _compile(circuit: CircuitDAG, foliation: list[list[str]] | None) -> list[_Layer]:
    if foliation is None:
        foliation = foliate(circuit)
    else:
        report = validate(circuit)
        if not report.ok:
            raise CircuitValidationError("; ".join(report.errors))
        _check_foliation(circuit, foliation)

    rule = circuit.theory.composite_rule
    in_wire: dict[Port, Wire] = {w.dst: w for w in circuit.wires}

    live: list[Wire] = []
    layers: list[_Layer] = []
    for layer_ids in foliation:
        gates = [(iid, circuit.gate(iid)) for iid in layer_ids]
        consumed: list[Wire] = []
        for iid, gate in gates:
            consumed.extend(in_wire[(iid, p)] for p in range(len(gate.inputs)))
        passthrough = [w for w in live if w not in consumed]
        target = consumed + passthrough

        perm = [live.index(w) for w in target]
        if perm == sorted(perm):
            perm_matrix = None
        else:
            types = [circuit.gate(w.src[0]).outputs[w.src[1]] for w in live]
            perm_matrix = rule.permutation_matrix(types, perm)

        pass_types = [circuit.gate(w.src[0]).outputs[w.src[1]] for w in passthrough]
        idents = [rule.identity(t) for t in pass_types]
        combos: dict[tuple[str, ...], np.ndarray] = {}
        for labels in itertools.product(*(g.outcome_labels for _, g in gates)):
            pieces = [g.outcomes[lab] for (_, g), lab in zip(gates, labels)] + idents
            combos[labels] = rule.parallel_matrix(pieces)

        layers.append(_Layer([iid for iid, _ in gates], perm_matrix, combos))

        produced: list[Wire] = []
        for iid, gate in gates:
            for p in range(len(gate.outputs)):
                produced.append(next(w for w in circuit.wires if w.src == (iid, p)))
        live = produced + passthrough
    return layers


def prob(
    circuit: CircuitDAG,
    z: OutcomeString | Mapping[str, str],
    foliation: list[list[str]] | None = None,
    tol: float = 1e-6,
) -> float:
    """Probability of one full outcome string.

    The value is the product of the layer matrices selected by ``z`` and is
    checked against the physical range [-tol, 1+tol].
    """
    if not isinstance(z, OutcomeString):
        z = circuit.outcome_string(z)
    chosen = z.as_dict()
    vec = np.ones(1)
    for layer in _compile(circuit, foliation):
        if layer.perm is not None:
            vec = layer.perm @ vec
        labels = tuple(chosen[iid] for iid in layer.gate_ids)
        vec = layer.combos[labels] @ vec
    value = float(vec[0])
    if not (-tol <= value <= 1.0 + tol):
        raise GptLabError(f"outcome probability {value} outside [0, 1]")
    return value


def distribution(
    circuit: CircuitDAG,
    cap: int = DEFAULT_ENUMERATION_CAP,
    foliation: list[list[str]] | None = None,
) -> dict[OutcomeString, float]:
    """Probability of every outcome string, by shared-prefix enumeration."""
    total = circuit.n_outcome_strings()
    if total > cap:
        raise CapacityError(f"{total} outcome strings exceed the enumeration cap {cap}")
    layers = _compile(circuit, foliation)
    order = {iid: k for k, iid in enumerate(circuit.instance_ids)}
    out: dict[OutcomeString, float] = {}

    def walk(depth: int, vec: np.ndarray, chosen: tuple[tuple[str, str], ...]) -> None:
        if depth == len(layers):
            pairs = tuple(sorted(chosen, key=lambda p: order[p[0]]))
            out[OutcomeString(pairs)] = float(vec[0])
            return
        layer = layers[depth]
        if layer.perm is not None:
            vec = layer.perm @ vec
        for labels, matrix in layer.combos.items():
            walk(depth + 1, matrix @ vec, chosen + tuple(zip(layer.gate_ids, labels)))

    walk(0, np.ones(1), ())
    return out


@dataclass(frozen=True)
class Acceptor:
    """The accept/reject function a(z) over outcome strings; a(z)=0 accepts.

    ``table`` acceptors carry an explicit mapping and must be total on the
    circuit's outcome strings. The built-in predicates run in time linear in
    the string length. Table sizes are checkable; asymptotic uniformity of a
    family of acceptors is the caller's claim.
    """

    kind: str  # "table" | "first-outcome-is-0" | "parity-of-labels" | "accept-all" | "reject-all"
    table: Mapping[tuple[tuple[str, str], ...], int] | None = None
    instance: str | None = None

    def value(self, z: OutcomeString) -> int:
        if self.kind == "table":
            try:
                return int(self.table[z.pairs])
            except (KeyError, TypeError):
                raise GptLabError(f"acceptor table has no entry for '{z}'") from None
        if self.kind == "first-outcome-is-0":
            label = z.label(self.instance) if self.instance else z.pairs[0][1]
            return 0 if label == "0" else 1
        if self.kind == "parity-of-labels":
            return sum(1 for _, lab in z.pairs if lab == "1") % 2
        if self.kind == "accept-all":
            return 0
        if self.kind == "reject-all":
            return 1
        raise GptLabError(f"unknown acceptor kind '{self.kind}'")

    def accepts(self, z: OutcomeString) -> bool:
        return self.value(z) == 0

    @staticmethod
    def from_table(entries, circuit: CircuitDAG) -> "Acceptor":
        """Build a table acceptor from (outcome assignment, a-value) pairs."""
        if isinstance(entries, Mapping):
            entries = entries.items()
        normalized = {}
        for assignment, value in entries:
            z = assignment if isinstance(assignment, OutcomeString) else circuit.outcome_string(assignment)
            normalized[z.pairs] = int(value)
        return Acceptor("table", table=normalized)


def acceptance_prob(
    circuit: CircuitDAG,
    acceptor: Acceptor,
    cap: int = DEFAULT_ENUMERATION_CAP,
    foliation: list[list[str]] | None = None,
) -> float:
    """Total probability of outcome strings with a(z) = 0."""
    dist = distribution(circuit, cap=cap, foliation=foliation)
    return sum(p for z, p in dist.items() if acceptor.accepts(z))


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INCONCLUSIVE = "inconclusive"


def decide(
    family: Callable[[str], CircuitDAG],
    acceptor: Acceptor,
    x: str,
    accept_at: float = 2.0 / 3.0,
    reject_at: float = 1.0 / 3.0,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Decision:
    """Bounded-error decision for one input of an indexed circuit family.

    The generator is trusted to emit polynomially sized circuits; only the
    acceptance probability is checked here. Thresholds are configurable since
    any constants separated by an inverse-polynomial gap define the same
    class.
    """
    circuit = family(x)
    p = acceptance_prob(circuit, acceptor, cap=cap)
    if p >= accept_at:
        return Decision.ACCEPT
    if p <= reject_at:
        return Decision.REJECT
    return Decision.INCONCLUSIVE
