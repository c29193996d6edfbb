"""Projector families, coherence projectors, and interference order."""

import itertools

import numpy as np
import pytest

from gptlab import DensityCarrier, hermitian_basis
from gptlab.errors import FamilyInvariantError, ReconstructionError
from gptlab.interference import (
    ProjectorFamily,
    classical_family,
    coherence_projector,
    decompose,
    interference_order,
    quantum_family,
    subsets,
    synthetic_family,
    validate_family,
)


def qutrit_carrier():
    return DensityCarrier(hermitian_basis(3))


def test_family_invariants_builtin():
    for family in (classical_family(3), quantum_family(3), synthetic_family(4, 2)):
        assert validate_family(family) == []


def test_family_invariant_violation_detected():
    bad = dict(classical_family(2).projectors)
    bad[frozenset({0})] = np.array([[0.5, 0.0], [0.0, 0.0]])  # not idempotent
    family = ProjectorFamily(2, bad)
    assert any("idempotent" in v for v in validate_family(family))
    with pytest.raises(FamilyInvariantError):
        interference_order(family)


def test_singleton_coherence_projector_is_projector():
    family = quantum_family(3)
    for i in range(3):
        assert np.allclose(coherence_projector(family, {i}), family.projector({i}), atol=0)


def test_qutrit_block_and_coherence_maps_match_displays():
    # P_{01} keeps the upper 2x2 block; omega_{01} keeps only its off-diagonal
    carrier = qutrit_carrier()
    family = quantum_family(3, carrier)
    rng = np.random.default_rng(31)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = (g + g.conj().T) / 2

    p01 = family.projector({0, 1})
    got = carrier.from_vector(p01 @ carrier.to_vector(rho))
    want = np.zeros((3, 3), dtype=complex)
    want[:2, :2] = rho[:2, :2]
    assert np.allclose(got, want, atol=1e-12)

    w01 = coherence_projector(family, {0, 1})
    got = carrier.from_vector(w01 @ carrier.to_vector(rho))
    want = np.zeros((3, 3), dtype=complex)
    want[0, 1], want[1, 0] = rho[0, 1], rho[1, 0]
    assert np.allclose(got, want, atol=1e-12)

    # and omega_{01} = P_{01} - P_{0} - P_{1} as matrices
    assert np.allclose(w01, p01 - family.projector({0}) - family.projector({1}), atol=1e-12)


def test_qutrit_full_coherence_projector_vanishes():
    family = quantum_family(3)
    w = coherence_projector(family, {0, 1, 2})
    assert np.max(np.abs(w)) <= 1e-12


def test_quantum_nullity_up_to_five_slits():
    # every coherence projector of three or more slits vanishes
    for d in (3, 4, 5):
        family = quantum_family(d)
        for key in subsets(d, min_size=3):
            assert np.max(np.abs(coherence_projector(family, key))) <= 1e-12


def test_interference_orders():
    for d in (2, 3, 4, 5):
        assert interference_order(classical_family(d)) == 1
    for d in (3, 4):
        assert interference_order(quantum_family(d)) == 2
    assert interference_order(synthetic_family(4, 3)) == 3
    assert interference_order(synthetic_family(5, 4)) == 4


def test_order_monotone_in_span():
    family = quantum_family(3)
    carrier = qutrit_carrier()
    # diagonal span only: no coherences at all -> order 1
    diag_span = np.column_stack([
        carrier.to_vector(np.diag(e)) for e in np.eye(3)
    ])
    assert interference_order(family, span=diag_span) == 1
    assert interference_order(family) == 2


def test_moebius_inversion_exact():
    for family in (classical_family(4), quantum_family(3), synthetic_family(5, 3)):
        total = np.zeros((family.dim, family.dim))
        for key in subsets(family.n_slits, min_size=1):
            total += coherence_projector(family, key)
        full = family.projector(frozenset(range(family.n_slits)))
        assert np.max(np.abs(total - full)) <= 1e-12


def test_coherence_projectors_orthogonal_on_quantum_families():
    family = quantum_family(3)
    keys = subsets(3, min_size=1, max_size=2)
    omegas = {k: coherence_projector(family, k) for k in keys}
    for a, b in itertools.product(keys, repeat=2):
        prod = omegas[a] @ omegas[b]
        if a == b:
            assert np.max(np.abs(prod - omegas[a])) <= 1e-9
        else:
            assert np.max(np.abs(prod)) <= 1e-9


def test_decompose_examples():
    carrier = qutrit_carrier()
    family = quantum_family(3, carrier)

    # support on {0,1} only: components containing slit 2 vanish
    plus = np.zeros((3, 3), dtype=complex)
    plus[:2, :2] = 0.5
    v = carrier.to_vector(plus)
    decomp = decompose(v, family, 2)
    assert decomp.residual <= 1e-12
    for key, comp in decomp.components.items():
        if 2 in key:
            assert np.linalg.norm(comp) <= 1e-12
    assert np.allclose(decomp.reconstruct(), v, atol=1e-12)

    # diagonal states have only singleton components
    diag = carrier.to_vector(np.diag([0.2, 0.3, 0.5]))
    decomp = decompose(diag, family, 2)
    for key, comp in decomp.components.items():
        if len(key) > 1:
            assert np.linalg.norm(comp) <= 1e-12

    zero = decompose(np.zeros(9), family, 1)
    assert all(np.linalg.norm(c) == 0 for c in zero.components.values())


def test_decompose_order_too_small():
    carrier = qutrit_carrier()
    family = quantum_family(3, carrier)
    plus = np.full((3, 3), 1 / 3, dtype=complex)  # coherences across all pairs
    v = carrier.to_vector(plus)
    with pytest.raises(ReconstructionError) as err:
        decompose(v, family, 1)
    assert err.value.residual > 0.1
    assert decompose(v, family, 2).residual <= 1e-12


def test_synthetic_family_axes():
    family = synthetic_family(4, 2)
    # omega_I projects exactly onto the axis labelled I
    axes = subsets(4, min_size=1, max_size=2)
    for i, key in enumerate(axes):
        w = coherence_projector(family, key)
        expected = np.zeros((family.dim, family.dim))
        expected[i, i] = 1.0
        assert np.allclose(w, expected, atol=1e-12)
    for key in subsets(4, min_size=3):
        assert np.max(np.abs(coherence_projector(family, key))) <= 1e-12


def test_invalid_subset_rejected():
    family = classical_family(3)
    with pytest.raises(ValueError):
        coherence_projector(family, set())
    with pytest.raises(ValueError):
        coherence_projector(family, {7})
    with pytest.raises(ValueError):
        family.projector({5})
