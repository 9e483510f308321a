import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdesigns.fock_core import (
    ComplexOperator,
    KrausChannel,
    SizeOverflowError,
    TruncatedSpace,
    apply_channel,
    check_side,
    diagonal_pseudo_inverse,
    fock_state,
    kron_power,
    lambda_element,
    partial_trace,
    permutation_operator,
    symmetric_projector,
    symmetric_projector_element,
    symmetric_trace,
)


def test_identity_permutation_is_identity():
    for dim, t in [(2, 1), (3, 2), (2, 3)]:
        w = permutation_operator(tuple(range(t)), TruncatedSpace(dim)).matrix
        assert np.array_equal(w, np.eye(dim ** t))


def test_transposition_is_swap():
    w = permutation_operator((1, 0), TruncatedSpace(2)).matrix
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    assert np.array_equal(w, swap)


def test_three_cycle_cubes_to_identity():
    w = permutation_operator((1, 2, 0), TruncatedSpace(3)).matrix
    assert np.array_equal(w @ w @ w, np.eye(27))
    assert not np.array_equal(w, np.eye(27))


def test_permutation_acts_on_product_states():
    dim = 3
    vecs = [fock_state(dim, n) for n in (0, 1, 2)]
    sigma = (1, 2, 0)
    w = permutation_operator(sigma, TruncatedSpace(dim)).matrix
    moved = [None] * 3
    for j, s in enumerate(sigma):
        moved[s] = vecs[j]
    expected = np.kron(np.kron(moved[0], moved[1]), moved[2])
    assert np.array_equal(w @ np.kron(np.kron(*vecs[:2]), vecs[2]), expected)


def test_permutation_rejects_non_permutation():
    with pytest.raises(ValueError):
        permutation_operator((0, 0), TruncatedSpace(2))


@pytest.mark.parametrize("dim,t", [(2, 2), (3, 2), (3, 3), (4, 3)])
def test_permutation_composition(dim, t):
    space = TruncatedSpace(dim)
    for s in itertools.permutations(range(t)):
        for u in itertools.permutations(range(t)):
            comp = tuple(s[u[j]] for j in range(t))
            lhs = permutation_operator(s, space).matrix @ permutation_operator(u, space).matrix
            assert np.array_equal(lhs, permutation_operator(comp, space).matrix)


def test_pi1_is_identity():
    assert np.allclose(symmetric_projector(TruncatedSpace(4), 1).matrix, np.eye(4))


def test_pi2_elements_on_qubits():
    p = symmetric_projector(TruncatedSpace(2), 2).matrix.reshape(2, 2, 2, 2)
    for a, b, c, d in itertools.product(range(2), repeat=4):
        expected = 0.5 * ((a == c) * (b == d) + (a == d) * (b == c))
        assert p[a, b, c, d] == pytest.approx(expected, abs=1e-15)


def test_pi2_trace_d5():
    assert np.trace(symmetric_projector(TruncatedSpace(5), 2).matrix).real == pytest.approx(15)


@pytest.mark.parametrize("dim", range(1, 7))
@pytest.mark.parametrize("t", [1, 2, 3])
def test_projector_trace_counts_multisets(dim, t):
    tr = np.trace(symmetric_projector(TruncatedSpace(dim), t).matrix).real
    assert tr == pytest.approx(math.comb(dim + t - 1, t), abs=1e-12)
    assert symmetric_trace(dim, t) == math.comb(dim + t - 1, t)


@pytest.mark.parametrize("dim,t", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (4, 3)])
def test_projector_idempotent_hermitian_and_absorbs_permutations(dim, t):
    space = TruncatedSpace(dim)
    p = symmetric_projector(space, t).matrix
    assert np.max(np.abs(p @ p - p)) < 1e-12
    assert np.max(np.abs(p - p.conj().T)) < 1e-12
    for s in itertools.permutations(range(t)):
        w = permutation_operator(s, space).matrix
        assert np.max(np.abs(p @ w - p)) < 1e-12
        assert np.max(np.abs(w @ p - p)) < 1e-12


def test_lambda_examples():
    assert lambda_element((3, 3)) == 1.0
    assert lambda_element((0, 1)) == 0.5
    p3 = symmetric_projector(TruncatedSpace(3), 3).matrix
    # |0,1,2> is row 0*9 + 1*3 + 2
    assert lambda_element((0, 1, 2), TruncatedSpace(3)) == pytest.approx(p3[5, 5].real)
    assert lambda_element((0, 1, 2)) == pytest.approx(1 / 6)


def test_lambda_rejects_out_of_range():
    with pytest.raises(IndexError):
        lambda_element((0, 4), TruncatedSpace(4))


@given(st.lists(st.integers(0, 6), min_size=1, max_size=5), st.randoms())
def test_lambda_permutation_and_shift_invariance(a, rnd):
    shuffled = list(a)
    rnd.shuffle(shuffled)
    assert lambda_element(a) == lambda_element(shuffled)
    assert lambda_element(a) == lambda_element([x + 1 for x in a])


@settings(max_examples=30)
@given(st.lists(st.integers(0, 2), min_size=2, max_size=3), st.lists(st.integers(0, 2), min_size=3, max_size=3))
def test_projector_element_matches_dense(a, b):
    b = b[: len(a)]
    p = symmetric_projector(TruncatedSpace(3), len(a)).matrix
    row = int(np.ravel_multi_index(a, (3,) * len(a)))
    col = int(np.ravel_multi_index(b, (3,) * len(b)))
    assert symmetric_projector_element(a, b) == pytest.approx(p[row, col].real, abs=1e-15)


def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    op = ComplexOperator(TruncatedSpace(3), 2, np.kron(a, b))
    assert np.allclose(partial_trace(op, [0]).matrix, a * np.trace(b))
    assert np.allclose(partial_trace(op, [1]).matrix, b * np.trace(a))


def test_partial_trace_of_swap_is_identity():
    swap = permutation_operator((1, 0), TruncatedSpace(3))
    assert np.allclose(partial_trace(swap, [1]).matrix, np.eye(3))


def test_partial_trace_of_pi2():
    p = symmetric_projector(TruncatedSpace(4), 2)
    assert np.allclose(partial_trace(p, [0]).matrix, 2.5 * np.eye(4))


@settings(max_examples=25)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_partial_trace_preserves_trace(dim, t, seed):
    rng = np.random.default_rng(seed)
    side = dim ** t
    op = ComplexOperator(TruncatedSpace(dim), t, rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side)))
    for keep in itertools.chain.from_iterable(itertools.combinations(range(t), k) for k in range(1, t + 1)):
        assert abs(partial_trace(op, keep).trace() - op.trace()) < 1e-12


def test_partial_trace_rejects_bad_subset():
    with pytest.raises(ValueError):
        partial_trace(symmetric_projector(TruncatedSpace(2), 2), [2])


def test_identity_channel_leaves_state():
    rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
    ch = KrausChannel((ComplexOperator(TruncatedSpace(3), 1, np.eye(3)),))
    assert np.allclose(apply_channel(ch, rho).matrix, rho)


def test_apply_channel_rejects_mismatch():
    ch = KrausChannel((ComplexOperator(TruncatedSpace(3), 1, np.eye(3)),))
    with pytest.raises(ValueError):
        apply_channel(ch, np.eye(2))


def test_pseudo_inverse_examples():
    assert np.allclose(diagonal_pseudo_inverse(np.eye(3)).matrix, np.eye(3))
    proj = np.diag([1.0, 1.0, 0.0, 0.0])
    assert np.allclose(diagonal_pseudo_inverse(proj).matrix, proj)
    r = np.diag([2.0, 0.0, 0.5])
    rp = diagonal_pseudo_inverse(r).matrix
    assert np.allclose(rp, np.diag([0.5, 0.0, 2.0]))
    assert np.allclose(r @ rp @ r, r)


def test_size_cap():
    with pytest.raises(SizeOverflowError):
        check_side(11, 4)
    with pytest.raises(SizeOverflowError):
        symmetric_projector(TruncatedSpace(30), 3)
    assert check_side(10, 4) == 10_000


def test_hermitian_flag_is_checked():
    with pytest.raises(ValueError):
        ComplexOperator(TruncatedSpace(2), 1, np.array([[0, 1], [0, 0]]), hermitian=True)


def test_operators_are_read_only():
    op = symmetric_projector(TruncatedSpace(2), 2)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5


def test_kron_power():
    m = np.array([[1, 2], [3, 4]])
    assert np.array_equal(kron_power(m, 2), np.kron(m, m))
