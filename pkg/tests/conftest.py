"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's transfer-matrix path:
``operator_distribution`` evaluates circuits by direct complex operator
algebra on the gates' Kraus data, and ``classical_path_distribution`` sums
over explicit basis-state trajectories. Random corpus builders are seeded.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from gptlab import (
    CircuitDAG,
    boxworld_gbit,
    classical_theory,
    quantum_theory,
    real_quantum_theory,
)
from gptlab.afftm import AffineMachine, Branch, initial_configuration
from gptlab.circuits import foliate


@pytest.fixture(scope="session")
def classical2():
    return classical_theory(2)


@pytest.fixture(scope="session")
def qubit():
    return quantum_theory(2)


@pytest.fixture(scope="session")
def rebit():
    return real_quantum_theory(2)


@pytest.fixture(scope="session")
def boxworld():
    return boxworld_gbit()


def all_theories():
    return [classical_theory(2), quantum_theory(2), real_quantum_theory(2), boxworld_gbit()]


# ---------------------------------------------------------------------------
# independent circuit oracles


def _wire_hilbert_dim(system) -> int:
    # quantum systems carry dim d^2, rebits dim 3; both sit on a 2-dim space here
    if system.dim in (3, 4):
        return 2
    raise AssertionError(f"oracle only handles two-level wires, got dim {system.dim}")


def _perm_unitary(dims, perm):
    n = int(np.prod(dims)) if dims else 1
    idx = np.arange(n).reshape(dims).transpose(perm).ravel()
    p = np.zeros((n, n))
    p[np.arange(n), idx] = 1.0
    return p


def operator_distribution(circuit: CircuitDAG) -> dict:
    """Outcome distribution by direct density-operator evolution.

    Uses only the wiring and each outcome's Kraus operators: no transfer
    matrices, no composite rule. Works for the quantum and rebit corpora.
    """
    layers = foliate(circuit, "singletons")
    in_wire = {w.dst: w for w in circuit.wires}
    order = {iid: k for k, iid in enumerate(circuit.instance_ids)}
    out: dict = {}

    def walk(depth, live, rho, chosen):
        if depth == len(layers):
            key = tuple(sorted(chosen, key=lambda p: order[p[0]]))
            out[key] = out.get(key, 0.0) + float(rho[0, 0].real)
            return
        iid = layers[depth][0]
        gate = circuit.gate(iid)
        wires_in = [in_wire[(iid, p)] for p in range(len(gate.inputs))]
        rest = [w for w in live if w not in wires_in]
        target = wires_in + rest
        dims = [2] * len(live)
        if live and target != live:
            perm = [live.index(w) for w in target]
            u = _perm_unitary(dims, perm)
            rho = u @ rho @ u.T
        rest_dim = 2 ** len(rest)
        produced = [next(w for w in circuit.wires if w.src == (iid, p))
                    for p in range(len(gate.outputs))]
        for label, tm in gate.outcomes.items():
            assert tm.kraus is not None, "oracle needs Kraus data"
            branch = np.zeros((tm.kraus[0].shape[0] * rest_dim,) * 2, dtype=complex)
            for k in tm.kraus:
                big = np.kron(k, np.eye(rest_dim))
                branch += big @ rho @ big.conj().T
            walk(depth + 1, produced + rest, branch, chosen + ((iid, label),))

    walk(0, [], np.ones((1, 1), dtype=complex), ())
    return out


def classical_path_distribution(circuit: CircuitDAG) -> dict:
    """Outcome distribution by summing over basis-state trajectories.

    Handles single-wire classical gates, which is all the classical corpus
    uses; probabilities come from explicit path products, not layer matrices.
    """
    layers = foliate(circuit, "singletons")
    in_wire = {w.dst: w for w in circuit.wires}
    order = {iid: k for k, iid in enumerate(circuit.instance_ids)}
    out: dict = {}

    def walk(depth, live, table, chosen):
        if depth == len(layers):
            key = tuple(sorted(chosen, key=lambda p: order[p[0]]))
            out[key] = out.get(key, 0.0) + sum(table.values())
            return
        iid = layers[depth][0]
        gate = circuit.gate(iid)
        assert len(gate.inputs) <= 1 and len(gate.outputs) <= 1
        for label, tm in gate.outcomes.items():
            m = tm.matrix
            if not gate.inputs:  # preparation
                new_live = live + [next(w for w in circuit.wires if w.src == (iid, 0))]
                new_table = {}
                for key, w in table.items():
                    for j in range(m.shape[0]):
                        if m[j, 0] != 0.0:
                            new_table[key + (j,)] = new_table.get(key + (j,), 0.0) + w * m[j, 0]
            elif not gate.outputs:  # effect
                pos = live.index(in_wire[(iid, 0)])
                new_live = live[:pos] + live[pos + 1:]
                new_table = {}
                for key, w in table.items():
                    nk = key[:pos] + key[pos + 1:]
                    val = w * m[0, key[pos]]
                    if val != 0.0:
                        new_table[nk] = new_table.get(nk, 0.0) + val
            else:  # transformation
                pos = live.index(in_wire[(iid, 0)])
                new_live = live[:pos] + [next(w for w in circuit.wires if w.src == (iid, 0))] + live[pos + 1:]
                new_table = {}
                for key, w in table.items():
                    for j in range(m.shape[0]):
                        if m[j, key[pos]] != 0.0:
                            nk = key[:pos] + (j,) + key[pos + 1:]
                            new_table[nk] = new_table.get(nk, 0.0) + w * m[j, key[pos]]
            walk(depth + 1, new_live, new_table, chosen + ((iid, label),))

    walk(0, [], {(): 1.0}, ())
    return out


# ---------------------------------------------------------------------------
# random corpora


_CATALOG = {
    "classical": dict(prep1=["prep_0", "prep_uniform", "coin"], prep2=[],
                      trans=["id", "not"], close1=["read", "sink"], close2=[]),
    "quantum": dict(prep1=["prep_0", "prep_plus", "prep_mixed"], prep2=["prep_bell"],
                    trans=["h", "x", "z", "t"], close1=["measure", "sink"], close2=[]),
    "real-quantum": dict(prep1=["prep_0", "prep_plus", "prep_mixed"], prep2=["prep_phi_plus"],
                         trans=["t1", "t2", "x", "h"], close1=["measure", "sink"],
                         close2=["joint_measure"]),
    "boxworld": dict(prep1=["prep_mixed", "prep_v00", "prep_v11", "prep_v01"], prep2=["prep_pr"],
                     trans=["id"], close1=["measure_x0", "measure_x1", "sink"], close2=[]),
}


def random_circuit(theory, rng: np.random.Generator, max_gates: int = 5) -> CircuitDAG:
    """A small random closed circuit: preparations, a few transformations,
    then a measurement or sink on every open wire."""
    cat = _CATALOG[theory.meta["builtin"]]
    c = CircuitDAG(theory)
    counter = itertools.count()
    open_ports: list = []

    def place(gname: str) -> None:
        iid = f"g{next(counter)}"
        gate = theory.gate(gname)
        c.add(iid, gate)
        for p in range(len(gate.inputs)):
            k = int(rng.integers(0, len(open_ports)))
            c.connect(open_ports.pop(k), (iid, p))
        for p in range(len(gate.outputs)):
            open_ports.append((iid, p))

    if cat["prep2"] and rng.random() < 0.4:
        place(str(rng.choice(cat["prep2"])))
    else:
        place(str(rng.choice(cat["prep1"])))
        if rng.random() < 0.5:
            place(str(rng.choice(cat["prep1"])))
    budget = max_gates - len(c.instances) - len(open_ports)
    for _ in range(int(rng.integers(0, max(1, budget + 1)))):
        place(str(rng.choice(cat["trans"])))
    if cat["close2"] and len(open_ports) == 2 and rng.random() < 0.5:
        place(str(rng.choice(cat["close2"])))
    while open_ports:
        place(str(rng.choice(cat["close1"])))
    return c


def random_machine(rng: np.random.Generator, n_work: int | None = None) -> AffineMachine:
    """A random validated machine; weight patterns include negative weights."""
    if n_work is None:
        n_work = int(rng.integers(1, 4))
    work = [f"w{i}" for i in range(n_work)]
    states = work + ["acc", "rej"]
    alphabet = ["0", "1", "_"]
    transitions = {}
    for s in work:
        for sym in alphabet:
            kind = rng.integers(0, 5)
            if kind == 0:
                weights = [1.0]
            elif kind == 1:
                weights = [0.5, 0.5]
            elif kind == 2:
                weights = [2.0, -1.0]
            elif kind == 3:
                w = float(rng.uniform(-1.0, 2.0))
                weights = [w, 1.0 - w]
            else:
                weights = list(rng.dirichlet(np.ones(3)))
            branches = tuple(
                Branch(next_state=str(rng.choice(states)),
                       write=str(rng.choice(alphabet)),
                       move=str(rng.choice(["L", "R", "S"])),
                       weight=w)
                for w in weights
            )
            transitions[(s, sym)] = branches
    return AffineMachine(states=frozenset(states), initial="w0", accept="acc",
                         reject="rej", blank="_", alphabet=frozenset(alphabet),
                         transitions=transitions)


def monte_carlo_acceptance(machine: AffineMachine, x: str, shots: int,
                           rng: np.random.Generator, max_steps: int = 200) -> float:
    """Sample a probabilistic machine (all weights nonnegative) by direct runs."""
    accepted = 0
    for _ in range(shots):
        cfg = initial_configuration(machine, x)
        for _ in range(max_steps):
            if machine.is_halting(cfg.state):
                break
            branches = machine.transitions[(cfg.state, cfg.read(machine.blank))]
            weights = np.array([b.weight for b in branches])
            assert np.all(weights >= 0)
            b = branches[rng.choice(len(branches), p=weights / weights.sum())]
            from gptlab.afftm import Configuration, _write, _MOVES
            tape = _write(cfg.tape, cfg.head, b.write, machine.blank)
            cfg = Configuration(b.next_state, tape, cfg.head + _MOVES[b.move])
        else:
            raise AssertionError("sampled branch did not halt")
        if cfg.state == machine.accept:
            accepted += 1
    return accepted / shots
