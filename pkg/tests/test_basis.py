import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import full_space_ladders, sector_projector_indices
from synthdim.basis import (
    LadderMonomial,
    enumerate_basis,
    monomial_matrix,
    monomial_matrix_element,
    sector_dimension,
)
from synthdim.exceptions import CapacityError, DomainError


@pytest.mark.parametrize("n, p, dim", [(3, 2, 6), (21, 2, 231), (11, 3, 286)])
def test_dimensions(n, p, dim):
    assert enumerate_basis(n, p).dim == dim == sector_dimension(n, p)


def test_order_is_lexicographic_descending():
    b = enumerate_basis(3, 2)
    assert [b.state(i) for i in range(b.dim)] == [
        (2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)
    ]
    rows = [tuple(r) for r in b.states]
    assert rows == sorted(rows, reverse=True)


@given(st.integers(1, 6), st.integers(0, 4))
def test_index_map_and_rank_agree(n, p):
    b = enumerate_basis(n, p)
    assert b.dim == comb(n + p - 1, p)
    assert np.all(b.states.sum(axis=1) == p)
    np.testing.assert_array_equal(b.rank(b.states), np.arange(b.dim))
    assert all(b.index(b.state(i)) == i for i in range(b.dim))


def test_deterministic():
    a, b = enumerate_basis(5, 3), enumerate_basis(5, 3)
    np.testing.assert_array_equal(a.states, b.states)


def test_errors():
    with pytest.raises(DomainError):
        enumerate_basis(0, 1)
    with pytest.raises(DomainError):
        enumerate_basis(3, -1)
    with pytest.raises(CapacityError):
        enumerate_basis(21, 2, max_dim=100)


def test_capacity_env(monkeypatch):
    monkeypatch.setenv("SYNTHDIM_MAX_DIM", "10")
    assert enumerate_basis(4, 2).dim == 10
    with pytest.raises(CapacityError):
        enumerate_basis(4, 3)


def test_matrix_element_examples():
    b = enumerate_basis(3, 2)
    row, amp = monomial_matrix_element(b, LadderMonomial((1,), (2,)), b.index((0, 2, 0)))
    assert b.state(row) == (1, 1, 0) and amp == pytest.approx(np.sqrt(2), abs=1e-15)
    row, amp = monomial_matrix_element(b, LadderMonomial((2,), (2,)), b.index((1, 1, 0)))
    assert b.state(row) == (1, 1, 0) and amp == 1.0
    row, amp = monomial_matrix_element(b, LadderMonomial((1, 3), (2, 2)), b.index((0, 2, 0)))
    assert b.state(row) == (1, 0, 1) and amp == pytest.approx(np.sqrt(2), abs=1e-15)


def test_matrix_element_absent_and_range():
    b = enumerate_basis(3, 2)
    assert monomial_matrix_element(b, LadderMonomial((1,), (3,)), b.index((2, 0, 0))) is None
    with pytest.raises(IndexError):
        monomial_matrix_element(b, LadderMonomial((1,), (1,)), 6)
    with pytest.raises(DomainError):
        monomial_matrix_element(b, LadderMonomial((4,), (1,)), 0)


def _oracle_monomial(n, p, mono):
    a = full_space_ladders(n, p + 2)
    op = np.eye(a[0].shape[0])
    for m in mono.annihilators[::-1]:
        op = a[m - 1] @ op
    for m in mono.creators[::-1]:
        op = a[m - 1].T @ op
    return op


@pytest.mark.parametrize("n, p", [(2, 2), (3, 2), (3, 3), (4, 2)])
def test_monomials_match_dense_oracle(n, p):
    b = enumerate_basis(n, p)
    idx = sector_projector_indices(n, p + 2, b.states)
    rng = np.random.default_rng(n * 10 + p)
    for _ in range(10):
        k = rng.integers(1, 3)
        modes = rng.integers(1, n + 1, size=2 * k)
        mono = LadderMonomial(tuple(modes[:k]), tuple(modes[k:]))
        ref = _oracle_monomial(n, p, mono)[np.ix_(idx, idx)]
        np.testing.assert_allclose(monomial_matrix(b, mono), ref, atol=1e-12)


@pytest.mark.parametrize("n, p", list(itertools.product(range(1, 5), range(0, 4))))
def test_number_operator_identity(n, p):
    b = enumerate_basis(n, p)
    for mode in range(1, n + 1):
        num = monomial_matrix(b, LadderMonomial((mode,), (mode,)))
        np.testing.assert_allclose(num, np.diag(b.states[:, mode - 1]), atol=1e-14)


def test_creation_is_adjoint_of_annihilation():
    lo, hi = enumerate_basis(3, 1), enumerate_basis(3, 2)
    for mode in (1, 2, 3):
        a = monomial_matrix(hi, LadderMonomial((), (mode,)), target=lo)
        ad = monomial_matrix(lo, LadderMonomial((mode,), ()), target=hi)
        np.testing.assert_allclose(ad, a.T, atol=1e-15)
