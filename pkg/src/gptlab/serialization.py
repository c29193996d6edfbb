"""JSON description formats for theories, circuits, machines, and families.

Weights and matrix entries are accepted as numbers, decimal strings, or
"p/q" rational strings; rational input is validated exactly before being
lowered to floats. Parse errors and domain-invariant violations are distinct
error classes so callers can map them to different exit codes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .afftm import AffineMachine, Branch, validate as validate_machine
from .circuits import Acceptor, CircuitDAG, validate as validate_circuit
from .errors import MachineValidationError, ParseError
from .interference import ProjectorFamily, validate_family
from .theories import (
    TheoryDescriptor,
    boxworld_gbit,
    classical_theory,
    quantum_theory,
    real_quantum_theory,
)

BUILTIN_THEORIES = {
    "classical": classical_theory,
    "quantum": quantum_theory,
    "real-quantum": real_quantum_theory,
    "boxworld": boxworld_gbit,
}


def _load(source, what: str) -> Any:
    """Accept a path, a JSON string, or an already-decoded mapping."""
    if isinstance(source, Mapping):
        return source
    path = Path(str(source))
    try:
        is_file = path.exists()
    except OSError:
        is_file = False
    if is_file:
        text = path.read_text()
        where = str(path)
    else:
        text = str(source)
        where = what
    if not text.strip():
        raise ParseError(f"empty {what} description", where)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", where) from None


def _require(doc: Mapping, key: str, what: str):
    if key not in doc:
        raise ParseError(f"missing field '{key}'", what)
    return doc[key]


def parse_number(value, where: str) -> float:
    """Number, decimal string, or 'p/q' rational string -> float."""
    if isinstance(value, bool):
        raise ParseError(f"expected a number, got {value!r}", where)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"cannot read number {value!r}", where) from None
    raise ParseError(f"expected a number, got {value!r}", where)


def exact_number(value) -> Fraction | None:
    """The exact rational behind a description entry, when there is one."""
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            return None
    return None


# ---------------------------------------------------------------------------
# theories


def parse_theory(source) -> TheoryDescriptor:
    doc = _load(source, "theory")
    builtin = _require(doc, "builtin", "theory")
    if builtin not in BUILTIN_THEORIES:
        raise ParseError(f"unknown builtin theory '{builtin}' "
                         f"(have {sorted(BUILTIN_THEORIES)})", "theory")
    params = doc.get("params", {})
    if not isinstance(params, Mapping):
        raise ParseError("'params' must be an object", "theory")
    try:
        return BUILTIN_THEORIES[builtin](**params)
    except TypeError as exc:
        raise ParseError(f"bad params for '{builtin}': {exc}", "theory") from None


def theory_to_json(theory: TheoryDescriptor) -> dict:
    if "builtin" not in theory.meta:
        raise ParseError("only builtin-backed theories serialize", "theory")
    return {"builtin": theory.meta["builtin"], "params": dict(theory.meta["params"])}


# ---------------------------------------------------------------------------
# circuits


def parse_circuit(source) -> tuple[CircuitDAG, Acceptor | None]:
    doc = _load(source, "circuit")
    theory = parse_theory(_require(doc, "theory", "circuit"))
    circuit = CircuitDAG(theory)
    for k, inst in enumerate(_require(doc, "instances", "circuit")):
        where = f"circuit.instances[{k}]"
        iid = _require(inst, "id", where)
        gname = _require(inst, "gate", where)
        if gname not in theory.gates:
            raise ParseError(f"theory '{theory.name}' has no gate '{gname}'", where)
        try:
            circuit.add(iid, theory.gates[gname])
        except ValueError as exc:
            raise ParseError(str(exc), where) from None
    for k, wire in enumerate(doc.get("wires", [])):
        where = f"circuit.wires[{k}]"
        src = _require(wire, "from", where)
        dst = _require(wire, "to", where)
        try:
            circuit.connect((src[0], int(src[1])), (dst[0], int(dst[1])))
        except (TypeError, IndexError, ValueError) as exc:
            raise ParseError(f"bad wire endpoints: {exc}", where) from None
    report = validate_circuit(circuit)
    if not report.ok:
        raise ParseError("; ".join(report.errors), "circuit")

    acceptor = None
    if "acceptor" in doc:
        acceptor = parse_acceptor(doc["acceptor"], circuit)
    return circuit, acceptor


def parse_acceptor(doc: Mapping, circuit: CircuitDAG) -> Acceptor:
    kind = _require(doc, "kind", "acceptor")
    if kind == "table":
        entries = _require(doc, "table", "acceptor")
        try:
            return Acceptor.from_table(
                [(row["z"], row["a"]) for row in entries], circuit
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"table rows need 'z' and 'a': {exc}", "acceptor") from None
    if kind in ("first-outcome-is-0", "parity-of-labels", "accept-all", "reject-all"):
        return Acceptor(kind, instance=doc.get("instance"))
    raise ParseError(f"unknown acceptor kind '{kind}'", "acceptor")


def circuit_to_json(circuit: CircuitDAG, acceptor: Acceptor | None = None) -> dict:
    doc = {
        "theory": theory_to_json(circuit.theory),
        "instances": [{"id": iid, "gate": gate.name} for iid, gate in circuit.instances],
        "wires": [{"from": list(w.src), "to": list(w.dst)} for w in circuit.wires],
    }
    if acceptor is not None:
        if acceptor.kind == "table":
            doc["acceptor"] = {"kind": "table", "table": [
                {"z": dict(pairs), "a": a} for pairs, a in acceptor.table.items()
            ]}
        else:
            doc["acceptor"] = {"kind": acceptor.kind}
            if acceptor.instance:
                doc["acceptor"]["instance"] = acceptor.instance
    return doc


# ---------------------------------------------------------------------------
# affine machines


def parse_machine(source) -> AffineMachine:
    doc = _load(source, "machine")
    states = _require(doc, "states", "machine")
    transitions: dict[tuple[str, str], tuple[Branch, ...]] = {}
    exact_sums: dict[tuple[str, str], Fraction | None] = {}
    for k, row in enumerate(_require(doc, "transitions", "machine")):
        where = f"machine.transitions[{k}]"
        key = (_require(row, "state", where), _require(row, "read", where))
        if key in transitions:
            raise ParseError(f"duplicate transition block for {key}", where)
        branches = []
        exact_total: Fraction | None = Fraction(0)
        for j, b in enumerate(_require(row, "branches", where)):
            bwhere = f"{where}.branches[{j}]"
            weight = parse_number(_require(b, "weight", bwhere), bwhere)
            branches.append(Branch(
                next_state=_require(b, "next", bwhere),
                write=_require(b, "write", bwhere),
                move=_require(b, "move", bwhere),
                weight=weight,
            ))
            exact = exact_number(b["weight"])
            exact_total = None if (exact is None or exact_total is None) else exact_total + exact
        transitions[key] = tuple(branches)
        exact_sums[key] = exact_total

    # Rational weight sums are checked exactly; anything else falls through
    # to the machine's floating-point validation.
    for key, total in exact_sums.items():
        if total is not None and total != 1:
            raise MachineValidationError(
                f"weights from {key!r} sum to {total}, not 1"
            )

    try:
        machine = AffineMachine(
            states=frozenset(states),
            initial=_require(doc, "initial", "machine"),
            accept=_require(doc, "accept", "machine"),
            reject=_require(doc, "reject", "machine"),
            blank=_require(doc, "blank", "machine"),
            alphabet=frozenset(_require(doc, "alphabet", "machine")),
            transitions=transitions,
        )
    except ValueError as exc:
        raise ParseError(str(exc), "machine") from None
    report = validate_machine(machine)
    if not report.ok:
        raise MachineValidationError("; ".join(report.violations))
    return machine


def machine_to_json(machine: AffineMachine) -> dict:
    rows = []
    for (state, read), branches in sorted(machine.transitions.items()):
        rows.append({
            "state": state,
            "read": read,
            "branches": [
                {"next": b.next_state, "write": b.write, "move": b.move,
                 "weight": repr(b.weight)}
                for b in branches
            ],
        })
    return {
        "states": sorted(machine.states),
        "initial": machine.initial,
        "accept": machine.accept,
        "reject": machine.reject,
        "blank": machine.blank,
        "alphabet": sorted(machine.alphabet),
        "transitions": rows,
    }


# ---------------------------------------------------------------------------
# projector families


def parse_family(source) -> ProjectorFamily:
    doc = _load(source, "family")
    n_slits = int(_require(doc, "n_slits", "family"))
    raw = _require(doc, "projectors", "family")
    projectors = {}
    for mask_str, rows in raw.items():
        where = f"family.projectors[{mask_str!r}]"
        try:
            mask = int(mask_str, 0)
        except ValueError:
            raise ParseError(f"subset keys are bitmask strings, got {mask_str!r}", where) from None
        subset = frozenset(i for i in range(n_slits) if mask >> i & 1)
        try:
            matrix = np.array([[parse_number(x, where) for x in row] for row in rows])
        except TypeError as exc:
            raise ParseError(f"bad matrix: {exc}", where) from None
        projectors[subset] = matrix
    try:
        family = ProjectorFamily(n_slits, projectors, name=doc.get("name", ""),
                                 synthetic=bool(doc.get("synthetic", False)))
    except ValueError as exc:
        raise ParseError(str(exc), "family") from None
    violations = validate_family(family)
    if violations:
        raise ParseError("; ".join(violations), "family")
    return family


def family_to_json(family: ProjectorFamily) -> dict:
    projectors = {}
    for subset, matrix in family.projectors.items():
        mask = sum(1 << i for i in subset)
        projectors[str(mask)] = [[repr(float(x)) for x in row] for row in matrix]
    doc = {"n_slits": family.n_slits, "projectors": projectors}
    if family.name:
        doc["name"] = family.name
    if family.synthetic:
        doc["synthetic"] = True
    return doc
