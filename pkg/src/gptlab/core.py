"""Real-linear carriers for operational theories.

States are real vectors, effects real covectors, transformations real
matrices, all tagged with system types; closed-circuit probabilities come out
of plain matrix arithmetic. Every object is immutable after construction and
safe to share between concurrent workers; the operations below are pure
functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import TheoryMismatchError, TypeMismatchError

# Default tolerance for physicality checks (probability ranges, norm caps).
PHYSICAL_TOL = 1e-9
# Default tolerance for algebraic identities (adjoints, compositions).
ALGEBRA_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemType:
    """A wire type: the dimension of the real vector space its states span."""

    label: str
    dim: int
    theory: str | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"system dimension must be >= 1, got {self.dim}")


# Trivial type carried by "no wire at all"; scalars live here.
UNIT = SystemType("unit", 1)


@dataclass(frozen=True)
class CompositeType(SystemType):
    """Joint system built from an ordered tuple of factors.

    ``embed`` maps the plain tensor product of the factor spaces injectively
    into the composite space. ``None`` means the composite *is* the tensor
    product (tomographically local composition). When an embed is present it
    only pins down the locally accessible part of the composite; directions
    outside its image are invisible to products of local objects.
    """

    factors: tuple[SystemType, ...] = ()
    embed: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        super().__post_init__()
        prod = 1
        for f in self.factors:
            prod *= f.dim
        if self.embed is None:
            if self.factors and prod != self.dim:
                raise ValueError(
                    f"composite dim {self.dim} != product of factor dims {prod} "
                    "(supply an embed map for non-product composites)"
                )
        else:
            emb = np.asarray(self.embed, dtype=float)
            if emb.shape != (self.dim, prod):
                raise ValueError(f"embed shape {emb.shape} != ({self.dim}, {prod})")
            object.__setattr__(self, "embed", _freeze(emb))


@dataclass(frozen=True, eq=False)
class StateVector:
    """A state, as the real coordinate vector of its system type.

    ``normalized`` marks states whose coordinates are fiducial outcome
    probabilities; for those the 2-norm is capped by 1 and the cap is
    enforced here. Theories using other coordinate conventions leave the
    flag unset.
    """

    system: SystemType
    coords: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.system.dim,):
            raise ValueError(f"coords shape {coords.shape} != ({self.system.dim},)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("state coordinates must be finite")
        if self.normalized and float(np.linalg.norm(coords)) > 1.0 + PHYSICAL_TOL:
            raise ValueError("normalized state exceeds the 2-norm bound of 1")
        object.__setattr__(self, "coords", _freeze(coords))


@dataclass(frozen=True, eq=False)
class EffectVector:
    """An effect, as a real covector paired with states by a dot product."""

    system: SystemType
    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.system.dim,):
            raise ValueError(f"coords shape {coords.shape} != ({self.system.dim},)")
        if not np.all(np.isfinite(coords)):
            raise ValueError("effect coordinates must be finite")
        object.__setattr__(self, "coords", _freeze(coords))


@dataclass(frozen=True, eq=False)
class TransformationMatrix:
    """One outcome of a device, as a real matrix between coordinate spaces.

    ``kraus`` optionally carries the operator form (rectangular Kraus
    operators on the underlying complex space). Theories whose composites
    are not tensor products need it to extend a transformation to joint
    systems; for everything else it is ignorable metadata.
    """

    input: SystemType
    output: SystemType
    matrix: np.ndarray
    outcome_label: str = ""
    kraus: tuple[np.ndarray, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (self.output.dim, self.input.dim):
            raise ValueError(
                f"matrix shape {matrix.shape} != ({self.output.dim}, {self.input.dim})"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("transformation entries must be finite")
        object.__setattr__(self, "matrix", _freeze(matrix))
        if self.kraus is not None:
            ks = tuple(_freeze(np.asarray(k, dtype=complex)) for k in self.kraus)
            object.__setattr__(self, "kraus", ks)


def _check_theories(*tags: str | None) -> None:
    seen = {t for t in tags if t is not None}
    if len(seen) > 1:
        raise TheoryMismatchError(f"cannot compose objects across theories: {sorted(seen)}")


def apply(t: TransformationMatrix, s: StateVector) -> StateVector:
    """Apply a transformation to a state by matrix multiplication."""
    if t.input != s.system:
        raise TypeMismatchError(
            f"transformation expects input '{t.input.label}', state is '{s.system.label}'"
        )
    return StateVector(t.output, t.matrix @ s.coords)


def pair(e: EffectVector, s: StateVector) -> float:
    """Probability of an effect on a state: the plain inner product."""
    if e.system != s.system:
        raise TypeMismatchError(
            f"effect lives on '{e.system.label}', state on '{s.system.label}'"
        )
    return float(e.coords @ s.coords)


def _kron_type(a: SystemType, b: SystemType) -> CompositeType:
    _check_theories(a.theory, b.theory)
    theory = a.theory if a.theory is not None else b.theory
    return CompositeType(
        label=f"({a.label}⊗{b.label})",
        dim=a.dim * b.dim,
        theory=theory,
        factors=(a, b),
    )


def _embed_pinv(ct: CompositeType) -> np.ndarray:
    return np.linalg.pinv(ct.embed)


def tensor(x, y, composite: CompositeType | tuple | None = None):
    """Parallel composition by Kronecker product.

    Works kind-by-kind on two states, two effects, or two transformations.
    When a :class:`CompositeType` with an embed map is supplied, coordinates
    are pushed through it (states/effects), or conjugated by it
    (transformations; pass a ``(input_composite, output_composite)`` pair when
    the two sides differ). With an embed the transformation result is only
    determined on the embedded local subspace and acts as zero on its
    complement; theories with genuinely global degrees of freedom extend
    gates through their own composite rule instead.
    """
    if isinstance(x, StateVector) and isinstance(y, StateVector):
        _check_theories(x.system.theory, y.system.theory)
        coords = np.kron(x.coords, y.coords)
        ctype = composite if composite is not None else _kron_type(x.system, y.system)
        if isinstance(ctype, CompositeType) and ctype.embed is not None:
            coords = ctype.embed @ coords
        return StateVector(ctype, coords)

    if isinstance(x, EffectVector) and isinstance(y, EffectVector):
        _check_theories(x.system.theory, y.system.theory)
        coords = np.kron(x.coords, y.coords)
        ctype = composite if composite is not None else _kron_type(x.system, y.system)
        if isinstance(ctype, CompositeType) and ctype.embed is not None:
            coords = coords @ _embed_pinv(ctype)
        return EffectVector(ctype, coords)

    if isinstance(x, TransformationMatrix) and isinstance(y, TransformationMatrix):
        _check_theories(x.input.theory, y.input.theory, x.output.theory, y.output.theory)
        matrix = np.kron(x.matrix, y.matrix)
        if composite is None:
            in_c = _kron_type(x.input, y.input)
            out_c = _kron_type(x.output, y.output)
        elif isinstance(composite, tuple):
            in_c, out_c = composite
        else:
            in_c = out_c = composite
        if isinstance(in_c, CompositeType) and in_c.embed is not None:
            matrix = matrix @ _embed_pinv(in_c)
        if isinstance(out_c, CompositeType) and out_c.embed is not None:
            matrix = out_c.embed @ matrix
        kraus = None
        if x.kraus is not None and y.kraus is not None:
            kraus = tuple(np.kron(k, l) for k in x.kraus for l in y.kraus)
        label = _join_labels(x.outcome_label, y.outcome_label)
        return TransformationMatrix(in_c, out_c, matrix, outcome_label=label, kraus=kraus)

    raise TypeError(f"cannot tensor {type(x).__name__} with {type(y).__name__}")


def _join_labels(a: str, b: str) -> str:
    if a and b:
        return f"{a}⊗{b}"
    return a or b


def approx_matrix(m, eps: float) -> np.ndarray:
    """Entrywise dyadic-rational approximation of a matrix.

    Rounds every entry to the nearest multiple of 2**-p with
    p = ceil(log2(1/eps)), so each approximation error is at most eps and
    the work grows only with log(1/eps). Returns an object array of
    :class:`fractions.Fraction`.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = m.matrix if isinstance(m, TransformationMatrix) else np.asarray(m, dtype=float)
    power = max(0, math.ceil(math.log2(1.0 / eps)))
    den = 2**power
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        out[idx] = Fraction(round(arr[idx] * den), den)
    return out


class CompositeRule:
    """Theory-owned recipe for joint systems and parallel composition.

    The circuit engine talks to theories only through this interface, so
    theories whose joint systems are bigger than the tensor product of the
    parts (no tomographic locality) still evaluate correctly.
    """

    name = "abstract"

    def composite(self, types: Sequence[SystemType]) -> SystemType:
        raise NotImplementedError

    def identity(self, system: SystemType) -> TransformationMatrix:
        raise NotImplementedError

    def parallel_matrix(self, pieces: Sequence[TransformationMatrix]) -> np.ndarray:
        """Matrix of the parallel composition of ``pieces``, in wire order."""
        raise NotImplementedError

    def permutation_matrix(self, types: Sequence[SystemType], perm: Sequence[int]) -> np.ndarray:
        """Matrix reordering a joint state so factor i comes from slot perm[i]."""
        raise NotImplementedError

    def product_state_coords(self, states: Sequence[StateVector]) -> np.ndarray:
        raise NotImplementedError

    def product_effect_coords(self, effects: Sequence[EffectVector]) -> np.ndarray:
        raise NotImplementedError


class KroneckerRule(CompositeRule):
    """Tensor-product composition: the tomographically local default."""

    name = "tensor-product"

    def __init__(self, theory: str | None = None):
        self.theory = theory
        self._perm_cache: dict = {}

    def composite(self, types: Sequence[SystemType]) -> SystemType:
        types = tuple(types)
        if not types:
            return UNIT
        if len(types) == 1:
            return types[0]
        dim = 1
        for t in types:
            dim *= t.dim
        label = "(" + "⊗".join(t.label for t in types) + ")"
        return CompositeType(label=label, dim=dim, theory=self.theory, factors=types)

    def identity(self, system: SystemType) -> TransformationMatrix:
        return TransformationMatrix(system, system, np.eye(system.dim))

    def parallel_matrix(self, pieces: Sequence[TransformationMatrix]) -> np.ndarray:
        return reduce(np.kron, [p.matrix for p in pieces], np.eye(1))

    def permutation_matrix(self, types: Sequence[SystemType], perm: Sequence[int]) -> np.ndarray:
        dims = tuple(t.dim for t in types)
        key = (dims, tuple(perm))
        cached = self._perm_cache.get(key)
        if cached is None:
            n = int(np.prod(dims)) if dims else 1
            idx = np.arange(n).reshape(dims).transpose(perm).ravel()
            cached = self._perm_cache[key] = _freeze(np.eye(n)[idx])
        return cached

    def product_state_coords(self, states: Sequence[StateVector]) -> np.ndarray:
        return reduce(np.kron, [s.coords for s in states], np.ones(1))

    def product_effect_coords(self, effects: Sequence[EffectVector]) -> np.ndarray:
        return reduce(np.kron, [e.coords for e in effects], np.ones(1))
