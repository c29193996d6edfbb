"""How much of a joint system n-local measurements can see.

``n_local_span`` computes the dimension spanned by products of joint effects
on blocks of at most n systems; whatever is left over is the tomography
defect, with an explicit orthonormal basis of inaccessible directions.
``distinguish_search`` hunts numerically for strategies separating two
transformations, locally or globally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import EffectVector, TransformationMatrix
from .errors import CapacityError, GptLabError, TypeMismatchError
from .theories import TheoryDescriptor

RANK_TOL = 1e-9


@dataclass
class TomographyReport:
    theory: str
    n_systems: int
    locality: int
    composite_dim: int
    n_local_span_dim: int
    defect: int
    defect_basis: np.ndarray  # (defect, composite_dim), orthonormal rows

    def summary(self) -> str:
        return (f"{self.theory}: N={self.n_systems} n={self.locality} "
                f"composite dim {self.composite_dim}, span {self.n_local_span_dim}, "
                f"defect {self.defect}")


def _partitions(items: Sequence[int], max_block: int) -> Iterator[list[tuple[int, ...]]]:
    """Set partitions of ``items`` with every block of size <= max_block."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(min(max_block, len(items)) - 1, -1, -1):
        for chosen in itertools.combinations(rest, k):
            block = (first,) + chosen
            remaining = [i for i in rest if i not in chosen]
            for tail in _partitions(remaining, max_block):
                yield [block] + tail


def n_local_span(theory: TheoryDescriptor, n_systems: int, locality: int,
                 system: str | None = None, cap: int = 4096,
                 rank_tol: float = RANK_TOL) -> TomographyReport:
    """Span of effects factorizing over blocks of at most ``locality`` systems.

    The spanning set runs over every partition of the N systems into blocks
    of size <= n, taking a full dual basis on each block (linear-hull
    convention); the span dimension is the rank of the stacked covectors,
    decided by singular values relative to the largest one.
    """
    if not (1 <= locality <= n_systems):
        raise ValueError("need 1 <= locality <= n_systems")
    sys_type = theory.system(system)
    rule = theory.composite_rule
    types = [sys_type] * n_systems
    composite = rule.composite(types)
    if composite.dim > cap:
        raise CapacityError(f"composite dimension {composite.dim} exceeds cap {cap}")

    rows = []
    for partition in _partitions(list(range(n_systems)), locality):
        flat = [i for block in partition for i in block]
        if flat == sorted(flat):
            perm_matrix = None
        else:
            perm_matrix = rule.permutation_matrix(types, flat)
        block_types = [rule.composite([sys_type] * len(block)) for block in partition]
        block_bases = [np.eye(bt.dim) for bt in block_types]
        for choice in itertools.product(*(range(bt.dim) for bt in block_types)):
            effs = [EffectVector(bt, basis[i])
                    for bt, basis, i in zip(block_types, block_bases, choice)]
            cov = rule.product_effect_coords(effs)
            if perm_matrix is not None:
                cov = cov @ perm_matrix
            rows.append(cov)

    stacked = np.asarray(rows)
    svals = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(svals > rank_tol * svals[0]))
    _, _, vt = np.linalg.svd(stacked, full_matrices=True)
    defect_basis = vt[rank:]
    return TomographyReport(
        theory=theory.name,
        n_systems=n_systems,
        locality=locality,
        composite_dim=composite.dim,
        n_local_span_dim=rank,
        defect=composite.dim - rank,
        defect_basis=defect_basis,
    )


def defect_direction_overlap(report: TomographyReport, candidate: np.ndarray) -> float:
    """Squared cosine between a composite-space vector and the defect subspace."""
    if report.defect < 1:
        raise GptLabError("the report has no defect subspace")
    candidate = np.asarray(candidate, dtype=float)
    norm = float(np.linalg.norm(candidate))
    if norm == 0.0:
        raise ValueError("candidate vector is zero")
    projected = report.defect_basis @ candidate
    return float(projected @ projected) / (norm * norm)


def fiducial_count(k: int, n_systems: int, locality: int) -> int:
    """Measurements needed for n-local tomography of N systems: k * C(N, n)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (1 <= locality <= n_systems):
        raise ValueError("need 1 <= locality <= n_systems")
    return k * math.comb(n_systems, locality)


# ---------------------------------------------------------------------------
# transformation discrimination


@dataclass
class SeparationReport:
    separation: float
    best_state: str
    best_effect: str
    locality: str
    evaluations: int


def distinguish_search(theory: TheoryDescriptor,
                       t: TransformationMatrix,
                       u: TransformationMatrix,
                       locality: str = "local",
                       seed: int = 0,
                       n_random: int = 10_000) -> SeparationReport:
    """Largest |e((T x I)s) - e((U x I)s)| found over a strategy class.

    Local strategies run product states against product effects, drawn from
    the theory's deterministic grid plus ``n_random`` random samples; global
    strategies additionally use the theory's library of joint states and
    joint effects on the pair. A search cannot prove indistinguishability,
    only bound the separation over the strategies tried.
    """
    if (t.input, t.output) != (u.input, u.output):
        raise TypeMismatchError("the two transformations have different signatures")
    if theory.strategies is None:
        raise GptLabError(f"theory '{theory.name}' provides no strategy hooks")
    sys_type = t.input
    rule = theory.composite_rule
    pair_type = rule.composite([sys_type, sys_type])
    ident = rule.identity(sys_type)
    diff = rule.parallel_matrix([t, ident]) - rule.parallel_matrix([u, ident])

    hooks = theory.strategies
    rng = np.random.default_rng(seed)
    grid_states = hooks.state_grid(sys_type)
    grid_effects = hooks.effect_grid(sys_type)

    state_cols, state_names = [], []
    for (na, sa), (nb, sb) in itertools.product(grid_states, repeat=2):
        state_cols.append(rule.product_state_coords([sa, sb]))
        state_names.append(f"{na}⊗{nb}")
    effect_rows, effect_names = [], []
    for (na, ea), (nb, eb) in itertools.product(grid_effects, repeat=2):
        effect_rows.append(rule.product_effect_coords([ea, eb]))
        effect_names.append(f"{na}⊗{nb}")

    if locality == "global":
        for name, s in theory.states.items():
            if s.system == pair_type:
                state_cols.append(s.coords)
                state_names.append(name)
        for name, e in theory.effects.items():
            if e.system == pair_type:
                effect_rows.append(e.coords)
                effect_names.append(name)
    elif locality != "local":
        raise ValueError("locality must be 'local' or 'global'")

    smat = np.column_stack(state_cols)
    emat = np.vstack(effect_rows)
    grid_vals = np.abs(emat @ diff @ smat)
    best = float(grid_vals.max())
    ei, si = np.unravel_index(int(grid_vals.argmax()), grid_vals.shape)
    best_state, best_effect = state_names[si], effect_names[ei]
    evaluations = grid_vals.size

    # random product strategies, one quadruple per sample
    rs = np.column_stack([
        rule.product_state_coords([hooks.random_state(sys_type, rng),
                                   hooks.random_state(sys_type, rng)])
        for _ in range(n_random)
    ])
    re = np.vstack([
        rule.product_effect_coords([hooks.random_effect(sys_type, rng),
                                    hooks.random_effect(sys_type, rng)])
        for _ in range(n_random)
    ])
    rand_vals = np.abs(np.einsum("ij,ji->i", re @ diff, rs))
    evaluations += rand_vals.size
    if rand_vals.size and float(rand_vals.max()) > best:
        i = int(rand_vals.argmax())
        best = float(rand_vals.max())
        best_state, best_effect = f"random[{i}]", f"random[{i}]"

    return SeparationReport(best, best_state, best_effect, locality, evaluations)
