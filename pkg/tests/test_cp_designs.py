import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdesigns.classical_designs import (
    DesignError,
    simplex_extremal_1design,
    simplex_extremal_centroid_2design,
    simplex_hammer_stroud_2design,
    torus_cycle_1design,
    torus_prime_2design,
    torus_product_tdesign,
    verify_simplex_design,
)
from cvdesigns.cp_designs import (
    CPDesign,
    born_project,
    constrained_extremal_points,
    constrained_first_moment,
    constrained_first_moment_mc,
    construction1_mub_design,
    construction2_uniform_design,
    cp_from_simplex_torus,
    design_moment,
    harmonic_number,
    mean_occupation,
    merge_states,
    verify_cp_design,
)


def haar_moment_mc(d, t, samples, seed):
    """Monte Carlo Haar average of (|psi><psi|)^{(x) t}, as an independent oracle."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    v = z
    for _ in range(t - 1):
        v = np.einsum("ki,kj->kij", v, z).reshape(samples, -1)
    return (v.T @ v.conj()) / samples


@pytest.mark.parametrize("d", range(2, 8))
def test_construction1_is_2design(d):
    des = construction1_mub_design(d)
    assert verify_cp_design(des, 2) < 1e-12
    assert verify_cp_design(des, 1) < 1e-12


@pytest.mark.parametrize("d", range(2, 7))
def test_construction2_is_2design(d):
    des = construction2_uniform_design(d)
    assert verify_cp_design(des, 2) < 1e-12
    assert np.allclose(des.weights, des.weights[0])


def test_construction_sizes():
    # d=3 uses p=3, d=5 uses p=5
    assert len(construction1_mub_design(3)) == 3 + 9
    assert len(construction1_mub_design(5)) == 5 + 25
    assert len(construction2_uniform_design(3)) == 27


def test_construction1_weights_d2():
    des = construction1_mub_design(2)
    assert np.allclose(des.weights[:2], 1 / 6)
    assert des.weights[2:].sum() == pytest.approx(2 / 3)


def test_qubit_moment_matches_haar_mc():
    mc = haar_moment_mc(2, 2, 200_000, seed=1)
    assert np.max(np.abs(design_moment(construction1_mub_design(2), 2) - mc)) < 5e-3


def test_basis_is_not_2design():
    des = CPDesign(np.eye(3), np.full(3, 1 / 3))
    assert verify_cp_design(des, 1) < 1e-14
    assert verify_cp_design(des, 2) > 0.05


def test_norms_agree_on_zero():
    des = construction1_mub_design(3)
    assert verify_cp_design(des, 2, norm="max") < 1e-12
    with pytest.raises(ValueError):
        verify_cp_design(des, 2, norm="frobenius")


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_product_of_2designs_is_2design(m):
    des = cp_from_simplex_torus(simplex_hammer_stroud_2design(m), torus_prime_2design(m + 1))
    assert verify_cp_design(des, 2) < 1e-12


def test_reduced_torus_is_not_enough():
    # fixing the first phase leaves unbalanced moments like exp(-i(phi_1 + phi_2)) unaveraged
    des = cp_from_simplex_torus(simplex_hammer_stroud_2design(2), torus_prime_2design(2))
    assert verify_cp_design(des, 2) > 1e-3


def test_product_with_d_angle_torus():
    des = cp_from_simplex_torus(simplex_extremal_centroid_2design(2), torus_prime_2design(3))
    assert verify_cp_design(des, 2) < 1e-12


def test_product_of_1designs_is_1design():
    des = cp_from_simplex_torus(simplex_extremal_1design(3), torus_cycle_1design(3))
    assert verify_cp_design(des, 1) < 1e-12


def test_product_3design_qubit():
    # a two-level state space is a 2-sphere; simplex and torus 3-designs combine
    from cvdesigns.classical_designs import WeightedPointSet

    nodes, w = np.polynomial.legendre.leggauss(2)
    simplex = WeightedPointSet("simplex", np.column_stack([(1 + nodes) / 2, (1 - nodes) / 2]), w / 2)
    assert verify_simplex_design(simplex, 3) < 1e-14
    des = cp_from_simplex_torus(simplex, torus_product_tdesign(1, 3))
    assert verify_cp_design(des, 3) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(DesignError):
        cp_from_simplex_torus(simplex_hammer_stroud_2design(2), torus_prime_2design(5))


def test_merge_global_phase():
    psi = np.array([1, 1j]) / math.sqrt(2)
    states, weights = merge_states([psi, 1j * psi, [1, 0]], [0.25, 0.25, 0.5])
    assert len(states) == 2
    assert np.allclose(weights, [0.5, 0.5])


def test_born_projection_recovers_simplex():
    simplex = simplex_hammer_stroud_2design(3)
    des = cp_from_simplex_torus(simplex, torus_prime_2design(3))
    back = born_project(des)
    assert len(back) == len(simplex)
    assert np.allclose(back.weights, simplex.weights)
    assert verify_simplex_design(back, 2) < 1e-12


def test_cp_design_rejects_bad_weights():
    with pytest.raises(DesignError):
        CPDesign([[1, 0]], [0.5])
    with pytest.raises(DesignError):
        CPDesign([[1, 1]], [1.0])


def test_cp_design_json_round_trip(tmp_path):
    des = construction1_mub_design(3)
    path = tmp_path / "d.json"
    des.to_json(path)
    back = CPDesign.load(path)
    assert np.allclose(back.states, des.states)
    assert np.allclose(back.weights, des.weights)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_2design_invariant_under_unitary_average(d, seed):
    # the design moment equals the Haar moment, so a random unitary leaves it fixed
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    des = construction1_mub_design(d)
    rotated = CPDesign(des.states @ q.T, des.weights)
    assert verify_cp_design(rotated, 2) < 1e-11


# ---------------------------------------------------------------- constrained

@pytest.mark.parametrize("d,N", [
    (d, N)
    for d in (2, 3, 4, 6)
    for N in (Fraction(1, 2), Fraction(1), Fraction(3, 2))
    if N <= d - 1
])
def test_constrained_points_have_mean_N(d, N):
    for q in constrained_extremal_points(d, N, exact=True):
        assert sum(q) == 1
        assert mean_occupation(q) == N
        assert all(x >= 0 for x in q)
        assert sum(1 for x in q if x) <= 2


def test_constrained_points_d3():
    pts = constrained_extremal_points(3, Fraction(1), exact=True)
    assert pts == [[0, 1, 0], [Fraction(1, 2), 0, Fraction(1, 2)]]


def test_constrained_out_of_range():
    with pytest.raises(DesignError):
        constrained_extremal_points(3, 2.5)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 8])
def test_constrained_first_moment_closed_form(d):
    diag = np.real(np.diag(constrained_first_moment(d).matrix))
    exact = [1 - Fraction(sum(Fraction(1, j) for j in range(1, d)), d - 1)]
    exact += [Fraction(1, (d - 1) * j) for j in range(1, d)]
    assert sum(exact) == 1
    assert np.allclose(diag, [float(x) for x in exact], atol=1e-15)
    assert diag @ np.arange(d) == pytest.approx(1.0)


def test_constrained_first_moment_mc():
    mc = constrained_first_moment_mc(5, samples=200_000, seed=7)
    exact = np.real(np.diag(constrained_first_moment(5).matrix))
    assert np.max(np.abs(mc - exact)) < 3e-3


def test_harmonic_number():
    assert harmonic_number(3) == pytest.approx(11 / 6)
