import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdesigns.classical_designs import (
    TWO_PI,
    DesignError,
    WeightedPointSet,
    check_mub_equivalence,
    diophantine_solutions,
    dirichlet_moment_mc,
    is_prime,
    monomial_average,
    mub_phase_table,
    simplex_centroid_1design,
    simplex_extremal_1design,
    simplex_extremal_centroid_2design,
    simplex_hammer_stroud_2design,
    simplex_moment,
    smallest_prime_above,
    torus_cycle_1design,
    torus_min_size_bound,
    torus_min_size_check,
    torus_prime_2design,
    torus_product_tdesign,
    verify_simplex_design,
    verify_torus_design,
)


def exact_simplex_moment(beta):
    """Dirichlet moment in rational arithmetic."""
    m = len(beta) - 1
    num = math.factorial(m) * math.prod(math.factorial(b) for b in beta)
    return Fraction(num, math.factorial(m + sum(beta)))


# ---------------------------------------------------------------- simplex

def test_simplex_moment_examples():
    assert simplex_moment((1, 0)) == pytest.approx(0.5, abs=1e-15)
    assert simplex_moment((1, 1, 0)) == pytest.approx(1 / 12, abs=1e-15)
    assert simplex_moment((0, 0, 0, 0)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("beta,expected", [((1, 0), 0.5), ((1, 1, 0), 1 / 12), ((2, 0), 1 / 3)])
def test_simplex_moment_against_dirichlet_mc(beta, expected):
    assert dirichlet_moment_mc(beta, samples=200_000, seed=3) == pytest.approx(expected, abs=1e-2)


@given(st.lists(st.integers(0, 4), min_size=2, max_size=5))
def test_simplex_moment_matches_rational_oracle(beta):
    assert simplex_moment(beta) == pytest.approx(float(exact_simplex_moment(beta)), rel=1e-12)


def test_extremal_centroid_weights_m1():
    ens = simplex_extremal_centroid_2design(1)
    assert len(ens) == 3
    assert ens.weights[0] == pytest.approx(2 / 3)
    assert np.allclose(ens.weights[1:], 1 / 6)


@pytest.mark.parametrize("m", range(1, 7))
def test_extremal_centroid_is_2design(m):
    ens = simplex_extremal_centroid_2design(m)
    assert len(ens) == m + 2
    assert verify_simplex_design(ens, 2) < 1e-14
    assert verify_simplex_design(ens, 1) < 1e-14
    assert ens.is_normalized


def test_extremal_centroid_p0p1_m2():
    assert monomial_average(simplex_extremal_centroid_2design(2), (1, 1, 0)) == pytest.approx(1 / 12, abs=1e-15)


@pytest.mark.parametrize("m", [1, 3, 6])
def test_first_coordinate_average(m):
    ens = simplex_extremal_centroid_2design(m)
    exps = [1] + [0] * m
    assert monomial_average(ens, exps) == pytest.approx(1 / (m + 1), abs=1e-15)


def test_hammer_stroud_point_m2():
    ens = simplex_hammer_stroud_2design(2)
    assert np.allclose(ens.points[0], [2 / 3, 1 / 6, 1 / 6])


def test_hammer_stroud_square_moment_m1():
    # the two-point rule and the Dirichlet moment both give 1/3
    ens = simplex_hammer_stroud_2design(1)
    assert monomial_average(ens, (2, 0)) == pytest.approx(1 / 3, abs=1e-15)
    assert simplex_moment((2, 0)) == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("m", range(1, 9))
def test_hammer_stroud_is_2design(m):
    ens = simplex_hammer_stroud_2design(m)
    assert len(ens) == m + 1
    assert verify_simplex_design(ens, 2) < 1e-12


@pytest.mark.parametrize("m", range(1, 6))
def test_extremal_points_pass_t1_fail_t2(m):
    ens = simplex_extremal_1design(m)
    assert verify_simplex_design(ens, 1) < 1e-14
    assert verify_simplex_design(ens, 2) >= 1 / ((m + 1) * (m + 2)) - 1e-15


@pytest.mark.parametrize("m", range(1, 6))
def test_centroid_is_1design(m):
    assert verify_simplex_design(simplex_centroid_1design(m), 1) < 1e-14


def test_simplex_verifier_rejects_torus():
    with pytest.raises(DesignError):
        verify_simplex_design(torus_cycle_1design(2), 1)


# ---------------------------------------------------------------- torus

def test_product_design_m1_t1():
    ens = torus_product_tdesign(1, 1)
    assert np.allclose(sorted(ens.points[:, 0]), [0.0, math.pi])
    assert np.allclose(ens.weights, 0.5)


def test_product_design_m2_t2_grid():
    ens = torus_product_tdesign(2, 2)
    thirds = {0.0, TWO_PI / 3, 2 * TWO_PI / 3}
    assert len(ens) == 9
    got = {tuple(round(x, 12) for x in p) for p in ens.points}
    assert got == {tuple(round(x, 12) for x in p) for p in itertools.product(thirds, repeat=2)}


@pytest.mark.parametrize("m,t", [(1, 1), (1, 2), (1, 3), (2, 2), (3, 2), (2, 3), (4, 2)])
def test_product_design_hierarchy(m, t):
    ens = torus_product_tdesign(m, t)
    for s in range(1, t + 1):
        assert verify_torus_design(ens, s) < 1e-12


def test_product_design_fails_above_strength():
    assert verify_torus_design(torus_product_tdesign(2, 1), 2) > 0.5


def test_product_design_cap():
    with pytest.raises(DesignError):
        torus_product_tdesign(30, 2)


def test_prime_design_sizes():
    assert len(torus_prime_2design(2)) == 9
    assert len(torus_prime_2design(4)) == 25
    assert smallest_prime_above(3) == 5


@pytest.mark.parametrize("m", range(1, 7))
def test_prime_design_is_2design(m):
    ens = torus_prime_2design(m)
    assert verify_torus_design(ens, 2) < 1e-12
    assert verify_torus_design(ens, 1) < 1e-12


def test_prime_design_m4_error():
    assert verify_torus_design(torus_prime_2design(4), 2) < 1e-12


def test_prime_bertrand_bound():
    for m in range(1, 10_001, 37):
        assert smallest_prime_above(max(2, m)) <= 2 * max(2, m)


def test_prime_design_explicit_prime():
    assert verify_torus_design(torus_prime_2design(3, p=7), 2) < 1e-12
    with pytest.raises(DesignError):
        torus_prime_2design(3, p=9)


def test_single_point_fails_t1():
    ens = WeightedPointSet("torus", [[0.0, 0.0]], [1.0])
    assert verify_torus_design(ens, 1) == pytest.approx(1.0)


@pytest.mark.parametrize("m", range(1, 7))
def test_cycle_design(m):
    assert verify_torus_design(torus_cycle_1design(m), 1) < 1e-12


def test_diophantine_lemma():
    sols = diophantine_solutions(10)
    assert (2, 3, 3, 2) in sols
    assert (1, 4, 2, 3) not in sols
    for a, b, c, d in sols:
        assert {a, b} == {c, d}
    assert len(sols) == 11 * 11 * 2 - 11


def test_min_size_bound():
    assert torus_min_size_bound(1) == 1
    assert torus_min_size_check(torus_prime_2design(4), 4)
    assert len(torus_prime_2design(4)) >= 13
    assert torus_min_size_check(torus_product_tdesign(2, 2), 2)


# ---------------------------------------------------------------- MUBs

@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_mub_tables(n):
    assert check_mub_equivalence(mub_phase_table(n), n) == (True, True)


def test_mub_n3_formula():
    i, j, k = np.meshgrid(range(3), range(3), range(3), indexing="ij")
    table = 2 * math.pi * (j * k + i * k * k) / 3
    assert check_mub_equivalence(table, 3) == (True, True)


def test_mub_all_zero_fails_orthonormality():
    ortho, _ = check_mub_equivalence(np.zeros((3, 3, 3)), 3)
    assert not ortho


def test_mub_pauli_phases():
    table = np.array([
        [[0, 0], [0, math.pi]],
        [[0, math.pi / 2], [0, 3 * math.pi / 2]],
    ])
    assert check_mub_equivalence(table, 2) == (True, True)


def test_mub_malformed():
    with pytest.raises(DesignError):
        check_mub_equivalence(np.zeros((2, 3, 3)), 3)


def test_is_prime():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


# ---------------------------------------------------------------- containers

def test_weights_must_be_positive():
    with pytest.raises(DesignError):
        WeightedPointSet("simplex", [[1.0, 0.0]], [0.0])
    with pytest.raises(DesignError):
        WeightedPointSet("simplex", [[0.7, 0.7]], [1.0])


def test_torus_angles_reduced():
    ens = WeightedPointSet("torus", [[-math.pi, 3 * math.pi]], [1.0])
    assert np.allclose(ens.points, [[math.pi, math.pi]])


@pytest.mark.parametrize("ens", [
    simplex_hammer_stroud_2design(3),
    torus_prime_2design(3),
    WeightedPointSet("state", [[1, 0], [0, 1j]], [0.5, 0.5]),
])
def test_json_round_trip(ens, tmp_path):
    path = tmp_path / "ens.json"
    ens.to_json(path)
    back = WeightedPointSet.load(path)
    assert back.kind == ens.kind
    assert np.allclose(back.points, ens.points)
    assert np.allclose(back.weights, ens.weights)
    assert json.loads(path.read_text())["kind"] == ens.kind


@settings(max_examples=30)
@given(st.integers(1, 4), st.floats(0, 2 * math.pi))
def test_torus_design_shift_invariance(m, shift):
    ens = torus_prime_2design(m)
    moved = WeightedPointSet("torus", ens.points + shift, ens.weights)
    assert verify_torus_design(moved, 2) < 1e-12
