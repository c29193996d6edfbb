"""Affine Turing machines: weighted nondeterministic branching over configurations.

Transitions carry real weights that must sum to exactly +1 for every
(state, symbol) a non-halting state can read; the weight of a computational
branch is the product of its transition weights, and the acceptance weight
of an input is the total weight landing in the accept state once every
branch has halted. Branches are evolved as a quasi-distribution over
configurations (dynamic programming), which produces the same acceptance
weights as explicit path trees but merges paths that reconverge.

Machines are immutable; runs on different inputs may proceed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .circuits import Acceptor, CircuitDAG, OutcomeString, _compile, foliate
from .errors import (
    GptLabError,
    HaltingViolationError,
    MachineValidationError,
)

WEIGHT_SUM_TOL = 1e-12
NORM_BOUND_TOL = 1e-9

Move = str  # "L" | "R" | "S"
_MOVES = {"L": -1, "R": 1, "S": 0}


@dataclass(frozen=True)
class Branch:
    next_state: str
    write: str
    move: Move
    weight: float

    def __post_init__(self) -> None:
        if self.move not in _MOVES:
            raise ValueError(f"move must be one of L/R/S, got '{self.move}'")


@dataclass(frozen=True, eq=False)
class AffineMachine:
    states: frozenset[str]
    initial: str
    accept: str
    reject: str
    blank: str
    alphabet: frozenset[str]
    transitions: Mapping[tuple[str, str], tuple[Branch, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "transitions", dict(self.transitions))
        for s in (self.initial, self.accept, self.reject):
            if s not in self.states:
                raise ValueError(f"'{s}' is not in the machine's state set")
        if self.blank not in self.alphabet:
            raise ValueError("blank symbol must be in the tape alphabet")

    def is_halting(self, state: str) -> bool:
        return state in (self.accept, self.reject)


@dataclass(frozen=True)
class Configuration:
    """Machine state + sparse bidirectional tape (blank cells omitted) + head."""

    state: str
    tape: tuple[tuple[int, str], ...]
    head: int

    def read(self, blank: str) -> str:
        for pos, sym in self.tape:
            if pos == self.head:
                return sym
        return blank


def _write(tape: tuple[tuple[int, str], ...], pos: int, sym: str, blank: str):
    items = [(p, s) for p, s in tape if p != pos]
    if sym != blank:
        items.append((pos, sym))
    items.sort()
    return tuple(items)


def initial_configuration(machine: AffineMachine, x: str) -> Configuration:
    tape = tuple((i, c) for i, c in enumerate(x) if c != machine.blank)
    return Configuration(machine.initial, tape, 0)


AffineVector = dict  # Configuration -> weight; exact zeros pruned


@dataclass
class MachineReport:
    ok: bool
    violations: list[str]

    def __bool__(self) -> bool:
        return self.ok


def validate(machine: AffineMachine) -> MachineReport:
    """List every (state, symbol) whose weights do not sum to +1, and any
    transition leaving a halting state."""
    violations: list[str] = []
    for (state, symbol), branches in machine.transitions.items():
        if machine.is_halting(state):
            violations.append(f"halting state '{state}' has outgoing transitions")
            continue
        total = sum(b.weight for b in branches)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            violations.append(f"weights from ({state!r}, {symbol!r}) sum to {total!r}, not 1")
    return MachineReport(not violations, violations)


def step(machine: AffineMachine, vector: AffineVector) -> AffineVector:
    """One parallel transition step; halting configurations persist unchanged."""
    out: AffineVector = {}
    for cfg, weight in vector.items():
        if machine.is_halting(cfg.state):
            out[cfg] = out.get(cfg, 0.0) + weight
            continue
        symbol = cfg.read(machine.blank)
        branches = machine.transitions.get((cfg.state, symbol))
        if not branches:
            raise MachineValidationError(
                f"no transition for non-halting ({cfg.state!r}, {symbol!r})"
            )
        for b in branches:
            tape = _write(cfg.tape, cfg.head, b.write, machine.blank)
            nxt = Configuration(b.next_state, tape, cfg.head + _MOVES[b.move])
            out[nxt] = out.get(nxt, 0.0) + weight * b.weight
    return {cfg: w for cfg, w in out.items() if w != 0.0}


def _run(machine: AffineMachine, x: str, max_steps: int):
    """Yield the affine vector after each step until every branch halts."""
    report = validate(machine)
    if not report.ok:
        raise MachineValidationError("; ".join(report.violations))
    vector: AffineVector = {initial_configuration(machine, x): 1.0}
    yield vector
    for _ in range(max_steps):
        if all(machine.is_halting(c.state) for c in vector):
            return
        vector = step(machine, vector)
        yield vector
    if not all(machine.is_halting(c.state) for c in vector):
        running = sorted({c.state for c in vector if not machine.is_halting(c.state)})
        raise HaltingViolationError(
            f"branches still running after {max_steps} steps (states {running})"
        )


def acceptance_weight(machine: AffineMachine, x: str, max_steps: int) -> float:
    """Total weight of accepting configurations once every branch has halted."""
    vector: AffineVector = {}
    for vector in _run(machine, x, max_steps):
        pass
    return sum(w for cfg, w in vector.items() if cfg.state == machine.accept)


@dataclass
class NormTrace:
    """Euclidean norms of the configuration quasi-distribution, step by step.

    Steps whose norm exceeds 1 witness dynamics unavailable to theories that
    assign probabilities to all composable circuits; the monitor reports and
    never enforces.
    """

    norms: list[float]
    flagged_steps: list[int]
    bound: float = 1.0 + NORM_BOUND_TOL

    @property
    def within_bound(self) -> bool:
        return not self.flagged_steps


def norm_trace(machine: AffineMachine, x: str, max_steps: int) -> NormTrace:
    norms = []
    for vector in _run(machine, x, max_steps):
        norms.append(float(np.sqrt(sum(w * w for w in vector.values()))))
    flagged = [i for i, n in enumerate(norms) if n > 1.0 + NORM_BOUND_TOL]
    return NormTrace(norms, flagged)


@dataclass
class PropernessEntry:
    input: str
    alpha: float
    ok: bool


@dataclass
class PropernessReport:
    entries: list[PropernessEntry]
    all_pass: bool
    note: str


def is_proper_on(machine: AffineMachine, inputs: Iterable[str], max_steps: int,
                 tol: float = 1e-9) -> PropernessReport:
    """Check 0 <= acceptance weight <= 1 on the given inputs.

    Properness over *all* inputs is undecidable in general; this is a
    finite-sample check and says so in the report.
    """
    entries = []
    for x in inputs:
        alpha = acceptance_weight(machine, x, max_steps)
        entries.append(PropernessEntry(x, alpha, -tol <= alpha <= 1.0 + tol))
    note = "finite-sample check only; properness over all inputs is undecidable"
    if not entries:
        note = "vacuous pass: no inputs supplied; " + note
    return PropernessReport(entries, all(e.ok for e in entries), note)


@dataclass
class BoundedErrorEntry:
    input: str
    label: bool
    alpha: float
    ok: bool


@dataclass
class BoundedErrorReport:
    entries: list[BoundedErrorEntry]
    passed: bool


def decides_with_bounded_error(machine: AffineMachine,
                               samples: Iterable[tuple[str, bool]],
                               max_steps: int,
                               accept_at: float = 2.0 / 3.0,
                               reject_at: float = 1.0 / 3.0) -> BoundedErrorReport:
    """Check alpha >= 2/3 on positive samples and alpha <= 1/3 on negatives."""
    entries = []
    for x, label in samples:
        alpha = acceptance_weight(machine, x, max_steps)
        ok = alpha >= accept_at if label else alpha <= reject_at
        entries.append(BoundedErrorEntry(x, bool(label), alpha, ok))
    return BoundedErrorReport(entries, all(e.ok for e in entries))


# ---------------------------------------------------------------------------
# circuit <-> affine program bridge


@dataclass(frozen=True)
class ProgramStep:
    """One branching step: a labelled affine matrix per outcome combination."""

    branches: tuple[tuple[tuple[tuple[str, str], ...], np.ndarray], ...]


@dataclass(frozen=True, eq=False)
class AffineProgram:
    """A branching sequence of affine maps plus an accepting functional.

    Running the program evolves a weight vector through every branch choice;
    the acceptance weight is the sum of the final scalars over branches the
    acceptor maps to 0.
    """

    steps: tuple[ProgramStep, ...]
    accept: Callable[[OutcomeString], bool]
    instance_order: tuple[str, ...]

    def acceptance_weight(self) -> float:
        total = 0.0
        order = {iid: k for k, iid in enumerate(self.instance_order)}

        def walk(depth: int, vec: np.ndarray, chosen: tuple) -> None:
            nonlocal total
            if depth == len(self.steps):
                pairs = tuple(sorted(chosen, key=lambda p: order[p[0]]))
                if self.accept(OutcomeString(pairs)):
                    total += float(vec[0])
                return
            for labels, matrix in self.steps[depth].branches:
                walk(depth + 1, matrix @ vec, chosen + labels)

        walk(0, np.ones(1), ())
        return total


def circuit_to_affine_program(circuit: CircuitDAG, acceptor: Acceptor,
                              cap: int = 2**20) -> AffineProgram:
    """Recast a closed circuit as a branching affine program.

    Each foliation layer becomes one branching step whose branches are the
    layer's outcome combinations; the permutation aligning wires is folded
    into every branch matrix. The program's acceptance weight equals the
    circuit's acceptance probability.
    """
    total = circuit.n_outcome_strings()
    if total > cap:
        raise GptLabError(f"{total} outcome strings exceed the bridge cap {cap}")
    layers = _compile(circuit, foliate(circuit))
    steps = []
    for layer in layers:
        branches = []
        for labels, matrix in layer.combos.items():
            m = matrix if layer.perm is None else matrix @ layer.perm
            branches.append((tuple(zip(layer.gate_ids, labels)), m))
        steps.append(ProgramStep(tuple(branches)))
    return AffineProgram(tuple(steps), acceptor.accepts, tuple(circuit.instance_ids))
