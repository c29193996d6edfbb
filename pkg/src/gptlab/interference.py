"""Slit projector families, coherence projectors, and interference order.

A projector family assigns a commuting idempotent P_I to every subset I of
slits, with P_I P_J equal to the projector of the intersection. The
coherence projector of a subset is the alternating (Moebius) sum of the
projectors of its subsets; it isolates exactly the coherences among that
subset of slits, and the largest subset size on which it acts nontrivially
is the interference order of the family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import FamilyInvariantError, ReconstructionError
from .theories import DensityCarrier, hermitian_basis

ZERO_TOL = 1e-9

Subset = frozenset


def subsets(n_slits: int, min_size: int = 0, max_size: int | None = None) -> list[frozenset]:
    """All slit subsets by (size, lexicographic) order."""
    max_size = n_slits if max_size is None else max_size
    out = []
    for k in range(min_size, max_size + 1):
        out.extend(frozenset(c) for c in itertools.combinations(range(n_slits), k))
    return out


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    """Square real matrices P_I on a common carrier space, indexed by slit subsets."""

    n_slits: int
    projectors: Mapping[frozenset, np.ndarray]
    name: str = ""
    synthetic: bool = False

    def __post_init__(self) -> None:
        fixed = {}
        dim = None
        for key, mat in self.projectors.items():
            mat = np.asarray(mat, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("projectors must be square matrices")
            if dim is None:
                dim = mat.shape[0]
            elif mat.shape[0] != dim:
                raise ValueError("projectors must share one carrier dimension")
            mat.setflags(write=False)
            fixed[frozenset(key)] = mat
        empty = frozenset()
        if empty not in fixed:
            fixed[empty] = np.zeros((dim, dim))
        object.__setattr__(self, "projectors", fixed)

    @property
    def dim(self) -> int:
        return self.projectors[frozenset(range(self.n_slits))].shape[0]

    def projector(self, subset: Iterable[int]) -> np.ndarray:
        key = frozenset(subset)
        if not key <= frozenset(range(self.n_slits)):
            raise ValueError(f"{sorted(key)} is not a subset of the {self.n_slits} slits")
        try:
            return self.projectors[key]
        except KeyError:
            raise FamilyInvariantError(f"family has no projector for subset {sorted(key)}") from None


def validate_family(family: ProjectorFamily, tol: float = ZERO_TOL) -> list[str]:
    """Check idempotence, the intersection law, the empty projector, and that
    the full projector is idempotent of full support. Returns violations."""
    violations = []
    keys = subsets(family.n_slits)
    for key in keys:
        if frozenset(key) not in family.projectors:
            violations.append(f"missing projector for subset {sorted(key)}")
    if violations:
        return violations
    for key in keys:
        p = family.projector(key)
        if np.max(np.abs(p @ p - p)) > tol:
            violations.append(f"P_{sorted(key)} is not idempotent")
    for a in keys:
        for b in keys:
            pa, pb = family.projector(a), family.projector(b)
            pab = family.projector(a & b)
            if np.max(np.abs(pa @ pb - pab)) > tol:
                violations.append(f"P_{sorted(a)} P_{sorted(b)} != P_{sorted(a & b)}")
    if np.max(np.abs(family.projector(frozenset()))) > tol:
        violations.append("P_emptyset is not zero")
    return violations


def coherence_projector(family: ProjectorFamily, subset: Iterable[int]) -> np.ndarray:
    """Alternating sum over sub-subsets: sum_{J <= I} (-1)^(|I|-|J|) P_J."""
    key = frozenset(subset)
    if not key:
        raise ValueError("coherence projectors are indexed by nonempty subsets")
    if not key <= frozenset(range(family.n_slits)):
        raise ValueError(f"{sorted(key)} is not a subset of the {family.n_slits} slits")
    out = np.zeros((family.dim, family.dim))
    for k in range(len(key) + 1):
        sign = (-1.0) ** (len(key) - k)
        for sub in itertools.combinations(sorted(key), k):
            out += sign * family.projector(frozenset(sub))
    return out


def interference_order(family: ProjectorFamily, span: np.ndarray | None = None,
                       tol: float = ZERO_TOL) -> int:
    """Largest subset size whose coherence projector acts nontrivially.

    ``span``: matrix whose columns span the state region of interest (default:
    the whole carrier space). Equivalently the result is the smallest k with
    omega_I v = 0 for every |I| > k and every v in the span.
    """
    violations = validate_family(family, tol)
    if violations:
        raise FamilyInvariantError("; ".join(violations))
    if span is None:
        span = np.eye(family.dim)
    span = np.asarray(span, dtype=float)
    scale = max(1.0, float(np.linalg.norm(span, 2)))
    full = family.projector(frozenset(range(family.n_slits)))
    if np.linalg.norm(full @ span - span, 2) > tol * scale:
        raise FamilyInvariantError("the full-slit projector is not the identity on the span")
    order = 1
    for key in subsets(family.n_slits, min_size=2):
        omega = coherence_projector(family, key)
        if np.linalg.norm(omega @ span, 2) > tol * scale:
            order = max(order, len(key))
    return order


@dataclass
class CoherenceDecomposition:
    """Components omega_I v for 1 <= |I| <= order; they re-sum to the input."""

    components: dict[frozenset, np.ndarray]
    order: int
    residual: float

    def reconstruct(self) -> np.ndarray:
        return sum(self.components.values())


def decompose(vector: np.ndarray, family: ProjectorFamily, order: int,
              tol: float = ZERO_TOL) -> CoherenceDecomposition:
    """Split a carrier-space vector into coherence components up to ``order``.

    Raises :class:`ReconstructionError` (carrying the residual norm) when the
    components do not re-sum to the input, i.e. when ``order`` is below the
    interference order on this vector.
    """
    vector = np.asarray(vector, dtype=float)
    components = {}
    for key in subsets(family.n_slits, min_size=1, max_size=order):
        components[key] = coherence_projector(family, key) @ vector
    residual = float(np.linalg.norm(sum(components.values()) - vector))
    if residual > tol * max(1.0, float(np.linalg.norm(vector))):
        raise ReconstructionError(
            f"components up to size {order} miss the input by {residual:.3e}", residual
        )
    return CoherenceDecomposition(components, order, residual)


# ---------------------------------------------------------------------------
# built-in families


def classical_family(d: int) -> ProjectorFamily:
    """d perfectly distinguishable slits on probability d-vectors."""
    projectors = {}
    for key in subsets(d):
        diag = np.zeros(d)
        for i in key:
            diag[i] = 1.0
        projectors[key] = np.diag(diag)
    return ProjectorFamily(d, projectors, name=f"classical-{d}")


def quantum_family(d: int, carrier: DensityCarrier | None = None) -> ProjectorFamily:
    """Slits = computational basis directions; P_I acts as rho -> Pi rho Pi.

    Matrices are superoperators on the transfer space of a d-level system.
    """
    if carrier is None:
        carrier = DensityCarrier(hermitian_basis(d))
    projectors = {}
    for key in subsets(d):
        pi = np.zeros((d, d), dtype=complex)
        for i in key:
            pi[i, i] = 1.0
        projectors[key] = carrier.channel_matrix([pi])
    return ProjectorFamily(d, projectors, name=f"quantum-{d}")


def synthetic_family(n_slits: int, order: int) -> ProjectorFamily:
    """A direct construction with interference order exactly ``order``.

    The carrier has one axis per nonempty slit subset of size <= order, and
    P_I projects onto the axes of subsets contained in I; then omega_I keeps
    exactly the axis of I. Labelled synthetic: it exercises the analyzer and
    is not claimed to arise from any physical theory.
    """
    if not (1 <= order <= n_slits):
        raise ValueError("order must lie between 1 and n_slits")
    axes = subsets(n_slits, min_size=1, max_size=order)
    index = {key: i for i, key in enumerate(axes)}
    dim = len(axes)
    projectors = {}
    for key in subsets(n_slits):
        diag = np.zeros(dim)
        for axis, i in index.items():
            if axis <= key:
                diag[i] = 1.0
        projectors[key] = np.diag(diag)
    return ProjectorFamily(n_slits, projectors,
                           name=f"synthetic-{n_slits}-order-{order}", synthetic=True)
