"""Concrete theory instances: classical, quantum, real-amplitude quantum, Boxworld.

Each constructor returns an immutable :class:`TheoryDescriptor` bundling
system types, a composite rule, a gate library, and small state/effect
libraries. Quantum-like theories represent operators as real coordinate
vectors over an orthonormal Hermitian operator basis, so pairing an effect
with a state is a plain dot product equal to Tr(E rho).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuits import Gate
from .core import (
    CompositeRule,
    CompositeType,
    EffectVector,
    KroneckerRule,
    StateVector,
    SystemType,
    TransformationMatrix,
    UNIT,
)
from .errors import GptLabError, TypeMismatchError

SQRT2 = math.sqrt(2.0)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DensityCarrier:
    """An orthonormal Hermitian operator basis with vectorisation maps.

    Orthonormality (Tr(B_i B_j) = delta_ij, checked to 1e-12) makes
    ``to_vector`` an isometry: the Euclidean norm of a state's coordinates
    equals sqrt(Tr(rho^2)), so norm monitors downstream are meaningful.
    """

    def __init__(self, basis: Sequence[np.ndarray], tol: float = 1e-12):
        stack = np.stack([np.asarray(b, dtype=complex) for b in basis])
        if np.max(np.abs(stack - stack.conj().transpose(0, 2, 1))) > tol:
            raise ValueError("carrier basis must be Hermitian")
        gram = np.einsum("aij,bji->ab", stack, stack)
        if np.max(np.abs(gram - np.eye(len(basis)))) > tol:
            raise ValueError("carrier basis must be orthonormal under the trace inner product")
        stack.setflags(write=False)
        self.basis = stack

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def hilbert_dim(self) -> int:
        return self.basis.shape[1]

    def to_vector(self, op: np.ndarray) -> np.ndarray:
        """Coordinates Tr(B_i op) of a Hermitian operator."""
        v = np.einsum("aij,ji->a", self.basis, np.asarray(op, dtype=complex))
        if np.max(np.abs(v.imag)) > 1e-9:
            raise ValueError("operator is not Hermitian in this carrier")
        return v.real

    def from_vector(self, coords: np.ndarray) -> np.ndarray:
        return np.einsum("a,aij->ij", np.asarray(coords, dtype=float), self.basis)

    def channel_matrix(self, kraus: Sequence[np.ndarray]) -> np.ndarray:
        """Transfer matrix M_ab = Tr(B_a sum_k K B_b K^dag) of a Kraus map."""
        moved = np.zeros_like(self.basis)
        for k in kraus:
            k = np.asarray(k, dtype=complex)
            moved = moved + np.einsum("ij,bjk,lk->bil", k, self.basis, k.conj())
        m = np.einsum("aij,bji->ab", self.basis, moved)
        return m.real


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Normalized identity plus generalized Gell-Mann matrices.

    For d=2 the order is I, X, Y, Z, each divided by sqrt(2).
    """
    mats = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / SQRT2
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j / SQRT2
            anti[k, j] = 1j / SQRT2
            mats.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        for j in range(l):
            diag[j, j] = 1.0
        diag[l, l] = -l
        mats.append(diag / math.sqrt(l * (l + 1)))
    return mats


def symmetric_pauli_basis(n_qubits: int) -> list[np.ndarray]:
    """Orthonormal basis of real symmetric matrices on (C^2)^n.

    These are the Pauli strings with an even number of Y factors. Strings
    without any Y come first, in lexicographic order over (I, X, Z), so they
    line up with the Kronecker product of the single-system bases; the
    remaining even-Y strings follow in lexicographic order.
    """
    no_y = ["".join(s) for s in itertools.product("IXZ", repeat=n_qubits)]
    rest = [
        "".join(s)
        for s in itertools.product("IXYZ", repeat=n_qubits)
        if "Y" in s and s.count("Y") % 2 == 0
    ]
    scale = 2.0 ** (n_qubits / 2.0)
    return [reduce(np.kron, [PAULI[c] for c in s]) / scale for s in no_y + rest]


def symmetric_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of real symmetric d x d matrices (diagonal units first)."""
    mats = [np.zeros((d, d), dtype=complex) for _ in range(d)]
    for j in range(d):
        mats[j][j, j] = 1.0
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1 / SQRT2
            mats.append(m)
    return mats


class RebitRule(CompositeRule):
    """Operator-space composition for real-amplitude two-level systems.

    A joint system of k rebits carries the full real symmetric matrix space
    of the underlying 2^k-dimensional real Hilbert space, which is strictly
    bigger than the tensor product of the local coordinate spaces. The embed
    map of the composite sends the local tensor product onto the Y-free
    coordinates; the extra even-Y directions are global degrees of freedom.
    Parallel composition therefore works on the operator (Kraus) form of
    each piece.
    """

    name = "real-symmetric"

    def __init__(self, theory: str = "real-quantum-2"):
        self.theory = theory
        self._carriers: dict[int, DensityCarrier] = {}
        self._perm_cache: dict = {}

    def carrier(self, n_qubits: int) -> DensityCarrier:
        got = self._carriers.get(n_qubits)
        if got is None:
            got = self._carriers[n_qubits] = DensityCarrier(symmetric_pauli_basis(n_qubits))
        return got

    def _carrier_for_hilbert(self, h: int) -> DensityCarrier:
        if h == 1:
            got = self._carriers.get(0)
            if got is None:
                got = self._carriers[0] = DensityCarrier([np.ones((1, 1), dtype=complex)])
            return got
        k = h.bit_length() - 1
        if 2**k != h:
            raise GptLabError(f"underlying dimension {h} is not a power of two")
        return self.carrier(k)

    def _n_leaves(self, t: SystemType) -> int:
        if t.dim == 1:
            return 0
        if isinstance(t, CompositeType) and t.factors:
            return sum(self._n_leaves(f) for f in t.factors)
        if t.dim != 3:
            raise GptLabError(f"'{t.label}' is not a rebit-backed type")
        return 1

    def composite(self, types: Sequence[SystemType]) -> SystemType:
        types = tuple(types)
        if not types:
            return UNIT
        if len(types) == 1:
            return types[0]
        k = sum(self._n_leaves(t) for t in types)
        hdim = 2**k
        dim = hdim * (hdim + 1) // 2
        local = 3**k
        embed = np.zeros((dim, local))
        embed[:local, :] = np.eye(local)
        label = "(" + "⊗".join(t.label for t in types) + ")"
        return CompositeType(label=label, dim=dim, theory=self.theory, factors=types, embed=embed)

    def identity(self, system: SystemType) -> TransformationMatrix:
        k = self._n_leaves(system)
        return TransformationMatrix(
            system, system, np.eye(system.dim), kraus=(np.eye(2**k, dtype=complex),)
        )

    def parallel_matrix(self, pieces: Sequence[TransformationMatrix]) -> np.ndarray:
        kraus_sets = []
        for p in pieces:
            if p.kraus is None:
                raise GptLabError(
                    f"gate outcome '{p.outcome_label}' lacks operator (Kraus) data; "
                    "rebit composites cannot be built from single-wire matrices alone"
                )
            kraus_sets.append(p.kraus)
        in_h = int(np.prod([k[0].shape[1] for k in kraus_sets]))
        out_h = int(np.prod([k[0].shape[0] for k in kraus_sets]))
        cin = self._carrier_for_hilbert(in_h)
        cout = self._carrier_for_hilbert(out_h)
        moved = np.zeros((cin.dim, out_h, out_h), dtype=complex)
        for combo in itertools.product(*kraus_sets):
            k = reduce(np.kron, combo)
            moved += np.einsum("ij,bjk,lk->bil", k, cin.basis, k.conj())
        return np.einsum("aij,bji->ab", cout.basis, moved).real

    def permutation_matrix(self, types: Sequence[SystemType], perm: Sequence[int]) -> np.ndarray:
        leaves = [self._n_leaves(t) for t in types]
        key = (tuple(leaves), tuple(perm))
        cached = self._perm_cache.get(key)
        if cached is not None:
            return cached
        offsets = np.cumsum([0] + leaves)
        new_leaf_order: list[int] = []
        for i in perm:
            new_leaf_order.extend(range(offsets[i], offsets[i] + leaves[i]))
        k = sum(leaves)
        if k == 0:
            return np.eye(1)
        h = 2**k
        u = np.zeros((h, h), dtype=complex)
        for old in range(h):
            bits = [(old >> (k - 1 - j)) & 1 for j in range(k)]
            new = 0
            for j, src in enumerate(new_leaf_order):
                new |= bits[src] << (k - 1 - j)
            u[new, old] = 1.0
        matrix = self._conjugation_matrix(u)
        matrix.setflags(write=False)
        self._perm_cache[key] = matrix
        return matrix

    def _conjugation_matrix(self, u: np.ndarray) -> np.ndarray:
        carrier = self._carrier_for_hilbert(u.shape[0])
        moved = np.einsum("ij,bjk,lk->bil", u, carrier.basis, u.conj())
        return np.einsum("aij,bji->ab", carrier.basis, moved).real

    def _operator_of(self, system: SystemType, coords: np.ndarray) -> np.ndarray:
        return self._carrier_for_hilbert(2 ** self._n_leaves(system)).from_vector(coords)

    def _product_coords(self, pieces: Sequence) -> np.ndarray:
        if all(p.system.dim == 3 for p in pieces):
            # Products of single-rebit operators have no support on the even-Y
            # block, so composite coordinates are the zero-padded Kronecker
            # product of the local ones.
            local = reduce(np.kron, [p.coords for p in pieces], np.ones(1))
            k = len(pieces)
            hdim = 2**k
            out = np.zeros(hdim * (hdim + 1) // 2)
            out[: local.shape[0]] = local
            return out
        ops = [self._operator_of(p.system, p.coords) for p in pieces]
        total = reduce(np.kron, ops, np.ones((1, 1), dtype=complex))
        return self._carrier_for_hilbert(total.shape[0]).to_vector(total)

    def product_state_coords(self, states: Sequence[StateVector]) -> np.ndarray:
        return self._product_coords(states)

    def product_effect_coords(self, effects: Sequence[EffectVector]) -> np.ndarray:
        return self._product_coords(effects)


class SingleSystemRule(CompositeRule):
    """Placeholder rule for theories whose composites are out of scope."""

    name = "single-system"

    def __init__(self, theory: str):
        self.theory = theory

    def composite(self, types: Sequence[SystemType]) -> SystemType:
        types = tuple(types)
        if not types:
            return UNIT
        if len(types) == 1:
            return types[0]
        raise GptLabError(f"theory '{self.theory}' does not define multi-system composites")

    def identity(self, system: SystemType) -> TransformationMatrix:
        return TransformationMatrix(system, system, np.eye(system.dim))

    def parallel_matrix(self, pieces):
        if len(pieces) == 1:
            return pieces[0].matrix
        raise GptLabError(f"theory '{self.theory}' does not define parallel composition")

    def permutation_matrix(self, types, perm):
        if list(perm) == list(range(len(types))):
            dim = int(np.prod([t.dim for t in types])) if types else 1
            return np.eye(dim)
        raise GptLabError(f"theory '{self.theory}' does not define wire permutations")

    def product_state_coords(self, states):
        if len(states) == 1:
            return states[0].coords
        raise GptLabError(f"theory '{self.theory}' does not define product states")

    def product_effect_coords(self, effects):
        if len(effects) == 1:
            return effects[0].coords
        raise GptLabError(f"theory '{self.theory}' does not define product effects")


@dataclass(frozen=True, eq=False)
class StrategyHooks:
    """Samplers used by discrimination searches: deterministic grids plus RNG draws."""

    state_grid: Callable[[SystemType], list[tuple[str, StateVector]]]
    random_state: Callable[[SystemType, np.random.Generator], StateVector]
    effect_grid: Callable[[SystemType], list[tuple[str, EffectVector]]]
    random_effect: Callable[[SystemType, np.random.Generator], EffectVector]


@dataclass(frozen=True, eq=False)
class TheoryDescriptor:
    """A named theory: types, composite rule, and device libraries.

    Descriptors are immutable and safe to share across workers. Causal
    theories carry exactly one deterministic effect per system type.
    """

    name: str
    system_types: Mapping[str, SystemType]
    composite_rule: CompositeRule
    gates: Mapping[str, Gate]
    states: Mapping[str, StateVector]
    effects: Mapping[str, EffectVector]
    deterministic_effects: Mapping[str, EffectVector]
    carrier: DensityCarrier | None = None
    strategies: StrategyHooks | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for label in self.system_types:
            if label not in self.deterministic_effects:
                raise ValueError(f"causal theory '{self.name}' lacks a deterministic "
                                 f"effect for type '{label}'")

    def system(self, label: str | None = None) -> SystemType:
        if label is None:
            if len(self.system_types) != 1:
                raise KeyError(f"theory '{self.name}' has several types; name one")
            return next(iter(self.system_types.values()))
        return self.system_types[label]

    def gate(self, name: str) -> Gate:
        try:
            return self.gates[name]
        except KeyError:
            raise KeyError(f"theory '{self.name}' has no gate '{name}'") from None

    def state(self, name: str) -> StateVector:
        return self.states[name]

    def effect(self, name: str) -> EffectVector:
        return self.effects[name]


# ---------------------------------------------------------------------------
# classical probability theory


def classical_theory(d: int) -> TheoryDescriptor:
    """Probability d-vectors, column-stochastic maps, all-ones readout."""
    if d < 1:
        raise ValueError("d must be >= 1")
    name = f"classical-{d}"
    sys = SystemType(f"c{d}", d, theory=name)
    rule = KroneckerRule(theory=name)
    eye = np.eye(d)

    gates: dict[str, Gate] = {}

    def prep(gname: str, outcomes: dict[str, np.ndarray]) -> None:
        gates[gname] = Gate(gname, (), (sys,), {
            lab: TransformationMatrix(UNIT, sys, col.reshape(d, 1), outcome_label=lab)
            for lab, col in outcomes.items()
        })

    for j in range(d):
        prep(f"prep_{j}", {"0": eye[:, j]})
    prep("prep_uniform", {"0": np.full(d, 1.0 / d)})
    if d == 2:
        prep("coin", {"0": np.array([0.5, 0.0]), "1": np.array([0.0, 0.5])})
        gates["not"] = Gate("not", (sys,), (sys,), {
            "0": TransformationMatrix(sys, sys, np.array([[0.0, 1.0], [1.0, 0.0]]))
        })
    gates["id"] = Gate("id", (sys,), (sys,), {"0": TransformationMatrix(sys, sys, eye)})
    gates["read"] = Gate("read", (sys,), (), {
        str(k): TransformationMatrix(sys, UNIT, eye[k].reshape(1, d), outcome_label=str(k))
        for k in range(d)
    })
    gates["sink"] = Gate("sink", (sys,), (), {
        "0": TransformationMatrix(sys, UNIT, np.ones((1, d)))
    })

    states = {f"s{j}": StateVector(sys, eye[:, j], normalized=True) for j in range(d)}
    states["uniform"] = StateVector(sys, np.full(d, 1.0 / d), normalized=True)
    effects = {f"p{j}": EffectVector(sys, eye[j]) for j in range(d)}
    effects["u"] = EffectVector(sys, np.ones(d))

    def state_grid(t: SystemType):
        return [(n, s) for n, s in states.items()]

    def random_state(t: SystemType, rng: np.random.Generator):
        return StateVector(sys, rng.dirichlet(np.ones(d)), normalized=True)

    def effect_grid(t: SystemType):
        return [(n, e) for n, e in effects.items()]

    def random_effect(t: SystemType, rng: np.random.Generator):
        return EffectVector(sys, rng.uniform(0.0, 1.0, size=d))

    return TheoryDescriptor(
        name=name,
        system_types={sys.label: sys},
        composite_rule=rule,
        gates=gates,
        states=states,
        effects=effects,
        deterministic_effects={sys.label: effects["u"]},
        strategies=StrategyHooks(state_grid, random_state, effect_grid, random_effect),
        meta={"builtin": "classical", "params": {"d": d}},
    )


# ---------------------------------------------------------------------------
# complex quantum theory


def _ket(d: int, j: int) -> np.ndarray:
    v = np.zeros((d, 1), dtype=complex)
    v[j, 0] = 1.0
    return v


def bell_operators() -> dict[str, np.ndarray]:
    """Projectors onto the four maximally entangled two-qubit states."""
    vecs = {
        "phi_plus": np.array([1, 0, 0, 1], dtype=complex) / SQRT2,
        "phi_minus": np.array([1, 0, 0, -1], dtype=complex) / SQRT2,
        "psi_plus": np.array([0, 1, 1, 0], dtype=complex) / SQRT2,
        "psi_minus": np.array([0, 1, -1, 0], dtype=complex) / SQRT2,
    }
    return {n: np.outer(v, v.conj()) for n, v in vecs.items()}


def quantum_theory(d: int) -> TheoryDescriptor:
    """Finite-dimensional quantum theory over an orthonormal Hermitian basis.

    Systems carry dim = d^2 real coordinates; channels become real d^2 x d^2
    transfer matrices, POVM elements covectors, and the deterministic effect
    is the coordinate vector of the identity operator.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    name = f"quantum-{d}"
    carrier = DensityCarrier(hermitian_basis(d))
    sys = SystemType(f"q{d}", d * d, theory=name)
    rule = KroneckerRule(theory=name)

    def proj(j: int) -> np.ndarray:
        k = _ket(d, j)
        return k @ k.conj().T

    gates: dict[str, Gate] = {}

    def prep_gate(gname: str, rho: np.ndarray, kraus: tuple) -> None:
        col = carrier.to_vector(rho).reshape(-1, 1)
        gates[gname] = Gate(gname, (), (sys,), {
            "0": TransformationMatrix(UNIT, sys, col, kraus=kraus)
        })

    def unitary_gate(gname: str, u: np.ndarray) -> None:
        gates[gname] = Gate(gname, (sys,), (sys,), {
            "0": TransformationMatrix(sys, sys, carrier.channel_matrix([u]), kraus=(u,))
        })

    for j in range(d):
        prep_gate(f"prep_{j}", proj(j), (_ket(d, j),))
    prep_gate("prep_mixed", np.eye(d, dtype=complex) / d,
              tuple(_ket(d, j) / math.sqrt(d) for j in range(d)))

    if d == 2:
        plus = np.full((2, 1), 1 / SQRT2, dtype=complex)
        prep_gate("prep_plus", plus @ plus.conj().T, (plus,))
        unitary_gate("h", np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2)
        unitary_gate("x", PAULI["X"])
        unitary_gate("z", PAULI["Z"])
        unitary_gate("s", np.diag([1, 1j]).astype(complex))
        unitary_gate("t", np.diag([1, np.exp(1j * math.pi / 4)]))

    gates["id"] = Gate("id", (sys,), (sys,), {
        "0": TransformationMatrix(sys, sys, np.eye(d * d), kraus=(np.eye(d, dtype=complex),))
    })
    gates["measure"] = Gate("measure", (sys,), (), {
        str(k): TransformationMatrix(sys, UNIT, carrier.to_vector(proj(k)).reshape(1, -1),
                                     outcome_label=str(k), kraus=(_ket(d, k).conj().T,))
        for k in range(d)
    })
    gates["sink"] = Gate("sink", (sys,), (), {
        "0": TransformationMatrix(sys, UNIT, carrier.to_vector(np.eye(d)).reshape(1, -1),
                                  kraus=tuple(_ket(d, k).conj().T for k in range(d)))
    })

    states = {f"basis_{j}": StateVector(sys, carrier.to_vector(proj(j)), normalized=True)
              for j in range(d)}
    states["mixed"] = StateVector(sys, carrier.to_vector(np.eye(d) / d), normalized=True)
    effects = {f"p{j}": EffectVector(sys, carrier.to_vector(proj(j))) for j in range(d)}
    effects["u"] = EffectVector(sys, carrier.to_vector(np.eye(d)))

    pair_carrier = None
    if d == 2:
        plus_op = np.full((2, 2), 0.5, dtype=complex)
        states["plus"] = StateVector(sys, carrier.to_vector(plus_op), normalized=True)
        effects["p_plus"] = EffectVector(sys, carrier.to_vector(plus_op))
        pair_carrier = DensityCarrier(
            [np.kron(a, b) for a in carrier.basis for b in carrier.basis]
        )
        pair = rule.composite([sys, sys])
        bells = bell_operators()
        for bname, op in bells.items():
            states[bname] = StateVector(pair, pair_carrier.to_vector(op), normalized=True)
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        gates["cnot"] = Gate("cnot", (sys, sys), (sys, sys), {
            "0": TransformationMatrix(pair, pair, pair_carrier.channel_matrix([cnot]),
                                      kraus=(cnot,))
        })
        phi_col = pair_carrier.to_vector(bells["phi_plus"]).reshape(-1, 1)
        gates["prep_bell"] = Gate("prep_bell", (), (sys, sys), {
            "0": TransformationMatrix(UNIT, pair, phi_col,
                                      kraus=(np.array([[1], [0], [0], [1]], dtype=complex) / SQRT2,))
        })

    def state_grid(t: SystemType):
        entries = [(n, s) for n, s in states.items() if s.system == sys]
        return entries

    def random_state(t: SystemType, rng: np.random.Generator):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        return StateVector(sys, carrier.to_vector(rho), normalized=True)

    def effect_grid(t: SystemType):
        return [(n, e) for n, e in effects.items()]

    def random_effect(t: SystemType, rng: np.random.Generator):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = (g + g.conj().T) / 2
        lo, hi = np.linalg.eigvalsh(h)[[0, -1]]
        e = (h - lo * np.eye(d)) / max(hi - lo, 1e-12) * rng.uniform(0.0, 1.0)
        return EffectVector(sys, carrier.to_vector(e))

    return TheoryDescriptor(
        name=name,
        system_types={sys.label: sys},
        composite_rule=rule,
        gates=gates,
        states=states,
        effects=effects,
        deterministic_effects={sys.label: effects["u"]},
        carrier=carrier,
        strategies=StrategyHooks(state_grid, random_state, effect_grid, random_effect),
        meta={"builtin": "quantum", "params": {"d": d}},
    )


# ---------------------------------------------------------------------------
# real-amplitude quantum theory


def real_quantum_theory(d: int = 2) -> TheoryDescriptor:
    """Quantum theory over real Hilbert spaces: states are real symmetric matrices.

    A single system carries dim = d(d+1)/2. For d=2 (rebits) the full worked
    gate set is included: the dephasing map t1 (rho -> rho/2 + Y rho Y / 2),
    the discard-and-reprepare map t2 (rho -> I tr(rho) / 2), entangled pair
    preparation, and the two-outcome joint measurement that tells their
    outputs apart. Composites for d>2 are out of scope.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    name = f"real-quantum-{d}"
    if d != 2:
        carrier = DensityCarrier(symmetric_basis(d))
        sys = SystemType(f"rq{d}", d * (d + 1) // 2, theory=name)
        eye_cov = EffectVector(sys, carrier.to_vector(np.eye(d)))
        return TheoryDescriptor(
            name=name,
            system_types={sys.label: sys},
            composite_rule=SingleSystemRule(name),
            gates={"id": Gate("id", (sys,), (sys,), {
                "0": TransformationMatrix(sys, sys, np.eye(sys.dim),
                                          kraus=(np.eye(d, dtype=complex),))
            })},
            states={"mixed": StateVector(sys, carrier.to_vector(np.eye(d) / d), normalized=True)},
            effects={"u": eye_cov},
            deterministic_effects={sys.label: eye_cov},
            carrier=carrier,
            meta={"builtin": "real-quantum", "params": {"d": d}},
        )

    rule = RebitRule(name)
    carrier = rule.carrier(1)
    sys = SystemType("rebit", 3, theory=name)
    pair = rule.composite([sys, sys])
    pair_carrier = rule.carrier(2)

    e0, e1 = np.array([[1.0], [0.0]], dtype=complex), np.array([[0.0], [1.0]], dtype=complex)
    had = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2

    def kraus_gate(gname: str, kraus: tuple) -> Gate:
        return Gate(gname, (sys,), (sys,), {
            "0": TransformationMatrix(sys, sys, carrier.channel_matrix(kraus), kraus=kraus)
        })

    gates: dict[str, Gate] = {
        "id": kraus_gate("id", (PAULI["I"],)),
        "x": kraus_gate("x", (PAULI["X"],)),
        "h": kraus_gate("h", (had,)),
        # rho -> rho/2 + Y rho Y/2: acts like total dephasing on every single
        # rebit, but preserves the global Y-parity of joint states.
        "t1": kraus_gate("t1", (PAULI["I"] / SQRT2, PAULI["Y"] / SQRT2)),
        # rho -> I tr(rho)/2: discard and reprepare maximally mixed.
        "t2": kraus_gate("t2", tuple(
            (a @ b.conj().T) / SQRT2 for a in (e0, e1) for b in (e0, e1)
        )),
    }

    def prep(gname: str, rho: np.ndarray, kraus: tuple) -> None:
        gates[gname] = Gate(gname, (), (sys,), {
            "0": TransformationMatrix(UNIT, sys, carrier.to_vector(rho).reshape(-1, 1),
                                      kraus=kraus)
        })

    prep("prep_0", e0 @ e0.conj().T, (e0,))
    plus = (e0 + e1) / SQRT2
    prep("prep_plus", plus @ plus.conj().T, (plus,))
    prep("prep_mixed", np.eye(2, dtype=complex) / 2, (e0 / SQRT2, e1 / SQRT2))

    gates["measure"] = Gate("measure", (sys,), (), {
        "0": TransformationMatrix(sys, UNIT, carrier.to_vector(e0 @ e0.conj().T).reshape(1, -1),
                                  outcome_label="0", kraus=(e0.conj().T,)),
        "1": TransformationMatrix(sys, UNIT, carrier.to_vector(e1 @ e1.conj().T).reshape(1, -1),
                                  outcome_label="1", kraus=(e1.conj().T,)),
    })
    gates["sink"] = Gate("sink", (sys,), (), {
        "0": TransformationMatrix(sys, UNIT, carrier.to_vector(np.eye(2)).reshape(1, -1),
                                  kraus=(e0.conj().T, e1.conj().T))
    })

    bells = bell_operators()
    bell_kets = {
        "phi_plus": np.array([[1], [0], [0], [1]], dtype=complex) / SQRT2,
        "phi_minus": np.array([[1], [0], [0], [-1]], dtype=complex) / SQRT2,
        "psi_plus": np.array([[0], [1], [1], [0]], dtype=complex) / SQRT2,
        "psi_minus": np.array([[0], [1], [-1], [0]], dtype=complex) / SQRT2,
    }
    gates["prep_phi_plus"] = Gate("prep_phi_plus", (), (sys, sys), {
        "0": TransformationMatrix(UNIT, pair,
                                  pair_carrier.to_vector(bells["phi_plus"]).reshape(-1, 1),
                                  kraus=(bell_kets["phi_plus"],))
    })
    # Two-outcome joint measurement {phi+ + psi-, phi- + psi+}.
    first_op = bells["phi_plus"] + bells["psi_minus"]
    second_op = bells["phi_minus"] + bells["psi_plus"]
    gates["joint_measure"] = Gate("joint_measure", (sys, sys), (), {
        "first": TransformationMatrix(pair, UNIT, pair_carrier.to_vector(first_op).reshape(1, -1),
                                      outcome_label="first",
                                      kraus=(bell_kets["phi_plus"].conj().T,
                                             bell_kets["psi_minus"].conj().T)),
        "second": TransformationMatrix(pair, UNIT, pair_carrier.to_vector(second_op).reshape(1, -1),
                                       outcome_label="second",
                                       kraus=(bell_kets["phi_minus"].conj().T,
                                              bell_kets["psi_plus"].conj().T)),
    })

    states = {
        "zero": StateVector(sys, carrier.to_vector(e0 @ e0.conj().T), normalized=True),
        "plus": StateVector(sys, carrier.to_vector(plus @ plus.conj().T), normalized=True),
        "mixed": StateVector(sys, carrier.to_vector(np.eye(2) / 2), normalized=True),
    }
    for bname, op in bells.items():
        states[bname] = StateVector(pair, pair_carrier.to_vector(op), normalized=True)
    effects = {
        "p0": EffectVector(sys, carrier.to_vector(e0 @ e0.conj().T)),
        "p1": EffectVector(sys, carrier.to_vector(e1 @ e1.conj().T)),
        "u": EffectVector(sys, carrier.to_vector(np.eye(2))),
        "joint_first": EffectVector(pair, pair_carrier.to_vector(first_op)),
        "joint_second": EffectVector(pair, pair_carrier.to_vector(second_op)),
    }

    def _state_coords(theta: float, r: float = 1.0) -> np.ndarray:
        # rho = (I + r cos(theta) X + r sin(theta) Z)/2 in the (I,X,Z)/sqrt2 basis
        return np.array([1.0, r * math.cos(theta), r * math.sin(theta)]) / SQRT2

    def _effect_coords(theta: float) -> np.ndarray:
        return np.array([1.0, math.cos(theta), math.sin(theta)]) / SQRT2

    grid_angles = [k * math.pi / 12 for k in range(24)]

    def state_grid(t: SystemType):
        entries = [(f"pure({k * 15}°)", StateVector(sys, _state_coords(a), normalized=True))
                   for k, a in enumerate(grid_angles)]
        entries.append(("mixed", states["mixed"]))
        return entries

    def random_state(t: SystemType, rng: np.random.Generator):
        theta = rng.uniform(0.0, 2 * math.pi)
        r = rng.uniform(0.0, 1.0)
        return StateVector(sys, _state_coords(theta, r), normalized=True)

    def effect_grid(t: SystemType):
        entries = [(f"proj({k * 15}°)", EffectVector(sys, _effect_coords(a)))
                   for k, a in enumerate(grid_angles)]
        entries.append(("unit", effects["u"]))
        return entries

    def random_effect(t: SystemType, rng: np.random.Generator):
        theta = rng.uniform(0.0, 2 * math.pi)
        alpha, beta = rng.uniform(0.0, 1.0, size=2)
        u_coords = effects["u"].coords
        p_coords = _effect_coords(theta)
        return EffectVector(sys, alpha * p_coords + beta * (u_coords - p_coords))

    return TheoryDescriptor(
        name=name,
        system_types={sys.label: sys},
        composite_rule=rule,
        gates=gates,
        states=states,
        effects=effects,
        deterministic_effects={sys.label: effects["u"]},
        carrier=carrier,
        strategies=StrategyHooks(state_grid, random_state, effect_grid, random_effect),
        meta={"builtin": "real-quantum", "params": {"d": 2}},
    )


# ---------------------------------------------------------------------------
# Boxworld


def _gbit_index(a: int, x: int) -> int:
    # coordinate layout: [u, (a=0|x=0), (a=1|x=0), (a=0|x=1), (a=1|x=1)]
    return 1 + 2 * x + a


def _gbit_coords(p0: float, p1: float) -> np.ndarray:
    # p0 = P(a=0 | x=0), p1 = P(a=0 | x=1)
    return np.array([1.0, p0, 1.0 - p0, p1, 1.0 - p1])


def pr_box_coords() -> np.ndarray:
    """The 25 coordinates of the PR box on two gbits: its full behaviour table."""
    coords = np.zeros(25)

    def put(i: int, j: int, v: float) -> None:
        coords[5 * i + j] = v

    put(0, 0, 1.0)
    for x in range(2):
        for a in range(2):
            put(_gbit_index(a, x), 0, 0.5)
            put(0, _gbit_index(a, x), 0.5)
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    p = 0.5 if (a ^ b) == (x & y) else 0.0
                    put(_gbit_index(a, x), _gbit_index(b, y), p)
    return coords


def boxworld_gbit() -> TheoryDescriptor:
    """The elementary Boxworld system: a square state space with two binary
    fiducial measurements, plus the PR box on a pair of them.

    Gbit vectors carry an explicit normalization coordinate so effects stay
    linear. Dynamics beyond local effects and the wirings needed for CHSH
    are not modelled.
    """
    name = "boxworld"
    sys = SystemType("gbit", 5, theory=name)
    rule = KroneckerRule(theory=name)
    pair = rule.composite([sys, sys])

    effects = {"u": EffectVector(sys, np.eye(5)[0])}
    for x in range(2):
        for a in range(2):
            effects[f"e{a}x{x}"] = EffectVector(sys, np.eye(5)[_gbit_index(a, x)])

    states = {"mixed": StateVector(sys, _gbit_coords(0.5, 0.5))}
    for p0 in (0, 1):
        for p1 in (0, 1):
            states[f"v{p0}{p1}"] = StateVector(sys, _gbit_coords(float(p0), float(p1)))
    states["pr_box"] = StateVector(pair, pr_box_coords())

    gates: dict[str, Gate] = {}
    for sname in ("mixed", "v00", "v01", "v10", "v11"):
        gates[f"prep_{sname}"] = Gate(f"prep_{sname}", (), (sys,), {
            "0": TransformationMatrix(UNIT, sys, states[sname].coords.reshape(-1, 1))
        })
    gates["prep_pr"] = Gate("prep_pr", (), (sys, sys), {
        "0": TransformationMatrix(UNIT, pair, pr_box_coords().reshape(-1, 1))
    })
    for x in range(2):
        gates[f"measure_x{x}"] = Gate(f"measure_x{x}", (sys,), (), {
            str(a): TransformationMatrix(sys, UNIT, effects[f"e{a}x{x}"].coords.reshape(1, -1),
                                         outcome_label=str(a))
            for a in range(2)
        })
    gates["sink"] = Gate("sink", (sys,), (), {
        "0": TransformationMatrix(sys, UNIT, effects["u"].coords.reshape(1, -1))
    })
    gates["id"] = Gate("id", (sys,), (sys,), {
        "0": TransformationMatrix(sys, sys, np.eye(5))
    })

    def state_grid(t: SystemType):
        return [(n, s) for n, s in states.items() if s.system == sys]

    def random_state(t: SystemType, rng: np.random.Generator):
        return StateVector(sys, _gbit_coords(rng.uniform(), rng.uniform()))

    def effect_grid(t: SystemType):
        return [(n, e) for n, e in effects.items()]

    def random_effect(t: SystemType, rng: np.random.Generator):
        x = rng.integers(0, 2)
        alpha, beta = rng.uniform(0.0, 1.0, size=2)
        return EffectVector(sys, alpha * effects[f"e0x{x}"].coords
                            + beta * effects[f"e1x{x}"].coords)

    return TheoryDescriptor(
        name=name,
        system_types={sys.label: sys},
        composite_rule=rule,
        gates=gates,
        states=states,
        effects=effects,
        deterministic_effects={sys.label: effects["u"]},
        strategies=StrategyHooks(state_grid, random_state, effect_grid, random_effect),
        meta={"builtin": "boxworld", "params": {}},
    )


# ---------------------------------------------------------------------------
# CHSH


Settings = tuple[tuple, tuple]  # ((A0, A1), (B0, B1)); each Ai/Bi = (effect+, effect-)


def chsh_value(theory: TheoryDescriptor, state: StateVector, settings: Settings) -> float:
    """E(0,0) + E(0,1) + E(1,0) - E(1,1) from pairing effects with the state."""
    (a_settings, b_settings) = settings
    rule = theory.composite_rule

    def correlator(ea_pair, eb_pair) -> float:
        total = 0.0
        for a, ea in enumerate(ea_pair):
            for b, eb in enumerate(eb_pair):
                cov = rule.product_effect_coords([ea, eb])
                if cov.shape != state.coords.shape:
                    raise TypeMismatchError(
                        "state does not live on the composite of the setting systems"
                    )
                total += (-1.0) ** (a + b) * float(cov @ state.coords)
        return total

    return (correlator(a_settings[0], b_settings[0])
            + correlator(a_settings[0], b_settings[1])
            + correlator(a_settings[1], b_settings[0])
            - correlator(a_settings[1], b_settings[1]))


def gbit_fiducial_settings(theory: TheoryDescriptor) -> Settings:
    """Both parties use their two fiducial measurements."""
    a = ((theory.effect("e0x0"), theory.effect("e1x0")),
         (theory.effect("e0x1"), theory.effect("e1x1")))
    return (a, a)


def tsirelson_settings(theory: TheoryDescriptor) -> Settings:
    """Qubit settings maximizing CHSH on the singlet: value 2*sqrt(2)."""
    carrier = theory.carrier
    sys = theory.system()

    def pm_effects(direction: np.ndarray) -> tuple[EffectVector, EffectVector]:
        n_sigma = direction[0] * PAULI["X"] + direction[1] * PAULI["Y"] + direction[2] * PAULI["Z"]
        plus = (np.eye(2) + n_sigma) / 2
        minus = (np.eye(2) - n_sigma) / 2
        return (EffectVector(sys, carrier.to_vector(plus)),
                EffectVector(sys, carrier.to_vector(minus)))

    z = np.array([0.0, 0.0, 1.0])
    x = np.array([1.0, 0.0, 0.0])
    a = (pm_effects(z), pm_effects(x))
    b = (pm_effects(-(z + x) / SQRT2), pm_effects((x - z) / SQRT2))
    return (a, b)
