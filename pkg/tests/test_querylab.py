"""Oracles, PARITY by pairing, amplitude-amplification search, and bounds."""

import itertools
import math

import numpy as np
import pytest

from gptlab.querylab import (
    Oracle,
    OracleFunction,
    bit_oracle_unitary,
    grover_search,
    grover_success_probability,
    lower_bound,
    oracle_unitary,
    parity_classical,
    parity_quantum,
)


def test_oracle_table_validation():
    with pytest.raises(ValueError):
        OracleFunction(())
    with pytest.raises(ValueError):
        OracleFunction((0, 2))


def test_bit_oracle_identity_cases():
    assert np.array_equal(bit_oracle_unitary(OracleFunction((0, 0))), np.eye(4))
    # constant one: identity on the control, bit flip on the target
    flip = np.kron(np.eye(2), np.array([[0, 1], [1, 0]]))
    assert np.array_equal(bit_oracle_unitary(OracleFunction((1, 1))), flip)


def test_bit_oracle_cnot_case():
    u = bit_oracle_unitary(OracleFunction((0, 1)))
    # basis images (x, y) -> (x, y xor f(x))
    for x in range(2):
        for y in range(2):
            src = np.zeros(4)
            src[2 * x + y] = 1.0
            dst = u @ src
            assert dst[2 * x + (y ^ (x == 1))] == 1.0
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.array_equal(u, cnot)


def test_bit_oracle_is_permutation_and_involution():
    rng = np.random.default_rng(4)
    for n in (2, 3, 5, 8):
        f = OracleFunction(tuple(rng.integers(0, 2, size=n)))
        u = bit_oracle_unitary(f)
        assert np.array_equal(u @ u, np.eye(u.shape[0]))
        assert np.array_equal(u.sum(axis=0), np.ones(u.shape[0]))
        assert np.array_equal(u.sum(axis=1), np.ones(u.shape[0]))


def test_oracle_unitary_carries_both_representations():
    t = oracle_unitary(OracleFunction((0, 1)))
    assert t.kraus[0].shape == (4, 4)
    assert t.matrix.shape == (16, 16)
    # transfer of an involution is an involution
    assert np.allclose(t.matrix @ t.matrix, np.eye(16), atol=1e-12)


def test_parity_classical_counts_n():
    for table in ((0, 0, 0, 0), (1, 0), (1, 1, 1)):
        f = OracleFunction(table)
        out = parity_classical(f)
        assert out.query_count == f.n_items
        assert out.result == sum(table) % 2


def test_parity_quantum_deutsch_case():
    out = parity_quantum(OracleFunction((0, 1)))
    assert (out.query_count, out.result) == (1, 1)


def test_parity_quantum_exhaustive_small():
    for n in (2, 3, 4, 5):
        for bits in itertools.product((0, 1), repeat=n):
            f = OracleFunction(bits)
            out = parity_quantum(f)
            assert out.result == sum(bits) % 2
            assert out.query_count == math.ceil(n / 2)


def test_query_counter_cannot_be_skipped():
    f = OracleFunction((0, 1, 1, 0))
    oracle = Oracle(f)
    state = np.zeros(2 * f.padded_size)
    state[0] = 1.0
    oracle.apply_bit_unitary(state)
    oracle.apply_phase(np.ones(4) / 2)
    oracle.classical(2)
    assert oracle.queries == 3


def test_grover_examples():
    out = grover_search(OracleFunction((0, 0, 1, 0)))
    assert out.query_count == 1
    assert out.success_probability == pytest.approx(1.0, abs=1e-9)
    assert out.result == 2 and out.success

    out = grover_search(OracleFunction((0,) * 15 + (1,)), iterations=3)
    assert out.success_probability >= 0.9

    out = grover_search(OracleFunction((1, 0, 0, 0)), iterations=0)
    assert out.success_probability == pytest.approx(1 / 4)


def test_grover_matches_closed_form():
    rng = np.random.default_rng(8)
    for n in (4, 16, 64):
        marked = int(rng.integers(0, n))
        table = [0] * n
        table[marked] = 1
        for t in (0, 1, 2, 5):
            out = grover_search(OracleFunction(tuple(table)), iterations=t)
            assert out.query_count == t
            assert out.success_probability == pytest.approx(
                grover_success_probability(n, t), abs=1e-9)


def test_grover_marked_item_validation():
    with pytest.raises(ValueError):
        grover_search(OracleFunction((0, 0, 0, 0)))
    with pytest.raises(ValueError):
        grover_search(OracleFunction((1, 1, 0, 0)))


def test_lower_bounds():
    assert lower_bound("parity", 10, 2).value == 5
    assert lower_bound("parity", 10, 10).value == 1
    assert lower_bound("parity", 10, 3).value == math.ceil(10 / 3)
    assert not lower_bound("parity", 10, 2).asymptotic

    search = lower_bound("search", 100, 2)
    assert search.value == pytest.approx(math.sqrt(50))
    assert search.asymptotic
    assert "asymptotic" in str(search)

    with pytest.raises(ValueError):
        lower_bound("parity", 0, 1)
    with pytest.raises(ValueError):
        lower_bound("sorting", 4, 2)
