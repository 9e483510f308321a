import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdesigns.rigged import (
    FAMILIES,
    InsufficientGridWarning,
    RiggedState,
    UnknownFamilyError,
    cos_claim_counterexamples,
    design_id,
    design_operator,
    rigged1_exact_element,
    rigged2_exact_element,
    rigged2_exact_tensor,
    rigged2_quadrature_element,
    rigged2_quadrature_tensor,
    rigged_coefficient,
    verify_rigged_design,
)

PI = math.pi


def legendre_oracle(family, idx, gamma=0.0, nodes=120):
    """Gauss-Legendre double integral, independent of the trapezoid code path."""
    ranges = {
        "phase": (-PI, PI),
        "cos": (0.0, PI),
        "sin": (-PI / 2, PI / 2),
        "rotated": (-PI, PI),
    }
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = ranges[family]
    th = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wt = 0.5 * (hi - lo) * w
    ph = PI * x
    wp = PI * w
    T, P = np.meshgrid(th, ph, indexing="ij")

    def c(n):
        k = n + 1
        if family == "phase":
            a = np.exp(1j * n * T) / math.sqrt(2 * PI)
        elif family == "cos":
            a = math.sqrt(2 / PI) * np.sin(k * T)
        elif family == "sin":
            a = math.sqrt(2 / PI) * 1j * np.exp(1j * k * PI / 2) * np.sin(k * (T - PI / 2))
        else:
            a = (np.exp(1j * k * T) - np.exp(-1j * k * (T - gamma))) / math.sqrt(8)
        return a * np.exp(1j * P * n * n)

    a, b, cc, d = idx
    f = c(a) * c(b) * np.conj(c(cc)) * np.conj(c(d))
    return complex(np.einsum("i,ij,j->", wt, f, wp))


def test_phase_coefficient_at_origin():
    for n in range(6):
        state = RiggedState("phase", 0.0, 0.0)
        assert rigged_coefficient(state, n) == pytest.approx(1 / math.sqrt(2 * PI))


def test_cos_coefficient_zero():
    assert abs(rigged_coefficient(RiggedState("cos", PI / 2, 0.3), 1)) < 1e-15


def test_rotated_at_pi_is_proportional_to_sin():
    n = np.arange(8)
    for theta, phi in [(0.3, 0.1), (-1.1, 2.0)]:
        rot = rigged_coefficient(RiggedState("rotated", theta, phi, gamma=PI), n)
        sin = rigged_coefficient(RiggedState("sin", theta, phi), n)
        assert np.allclose(rot * math.sqrt(8), sin * math.sqrt(2 * PI))


def test_state_validation():
    with pytest.raises(UnknownFamilyError):
        RiggedState("tan", 0, 0)
    with pytest.raises(ValueError):
        RiggedState("phase", math.inf, 0)
    with pytest.raises(ValueError):
        RiggedState("rotated", 0, 0, gamma=7.0)


@pytest.mark.parametrize("idx,expected", [
    ((0, 1, 0, 1), 1.0),
    ((0, 0, 0, 0), 1.0),
    ((0, 3, 1, 2), 0.0),
])
def test_phase_exact_examples(idx, expected):
    assert rigged2_exact_element("phase", *idx) == expected


def test_cos_sin_exact_examples():
    assert rigged2_exact_element("cos", 0, 0, 0, 0) == 3.0
    assert rigged2_exact_element("sin", 0, 1, 1, 0) == 2.0


@pytest.mark.parametrize("family", ["phase", "cos", "sin"])
@pytest.mark.parametrize("idx", [(0, 0, 0, 0), (0, 1, 0, 1), (1, 2, 2, 1), (0, 3, 1, 2), (2, 2, 2, 2), (1, 3, 3, 1)])
def test_exact_against_legendre_oracle(family, idx):
    assert rigged2_exact_element(family, *idx) == pytest.approx(legendre_oracle(family, idx).real, abs=1e-10)


@pytest.mark.parametrize("gamma", [0.0, 0.7, PI])
def test_rotated_exact_against_legendre_oracle(gamma):
    for idx in [(0, 0, 0, 0), (0, 1, 1, 0), (1, 2, 2, 1), (2, 0, 0, 2)]:
        got = rigged2_exact_element("rotated", *idx, gamma=gamma)
        assert got == pytest.approx(legendre_oracle("rotated", idx, gamma), abs=1e-10)


def test_phase_quadrature_257():
    assert rigged2_quadrature_element("phase", 1, 2, 2, 1, grid_points=257) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("family,idx,expected", [
    ("cos", (0, 0, 0, 0), 3.0),
    ("sin", (0, 1, 1, 0), 2.0),
])
def test_quadrature_examples(family, idx, expected):
    assert rigged2_quadrature_element(family, *idx) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_quadrature_tensor_matches_exact(family):
    gamma = 0.4 if family == "rotated" else 0.0
    quad = rigged2_quadrature_tensor(family, 6, gamma=gamma)
    assert np.max(np.abs(quad - rigged2_exact_tensor(family, 6, gamma))) < 1e-10


def test_tensor_matches_elementwise_quadrature():
    quad = rigged2_quadrature_tensor("cos", 4)
    for idx in [(0, 1, 2, 3), (3, 3, 3, 3), (1, 2, 2, 1)]:
        assert quad[idx] == pytest.approx(rigged2_quadrature_element("cos", *idx, grid_points=4 * 9 + 1), abs=1e-12)


def test_sign_flip_invariance():
    for family in FAMILIES:
        plus = rigged2_quadrature_tensor(family, 4, sign=1)
        minus = rigged2_quadrature_tensor(family, 4, sign=-1)
        assert np.max(np.abs(plus - minus)) < 1e-12


def test_coarse_grid_warns():
    with pytest.warns(InsufficientGridWarning):
        rigged2_quadrature_element("phase", 3, 0, 0, 3, grid_points=9)


def test_default_grid_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rigged2_quadrature_element("phase", 3, 0, 0, 3)


def test_no_cos_diophantine_solutions():
    assert cos_claim_counterexamples(50) == []


def test_first_moment_elements():
    assert rigged1_exact_element("phase", 2, 2) == pytest.approx(2 * PI)
    assert rigged1_exact_element("phase", 2, 3) == 0.0
    assert rigged1_exact_element("rotated", 1, 1) == pytest.approx(PI**2)


@pytest.mark.parametrize("family,dim", [("phase", 8), ("cos", 6), ("sin", 6), ("rotated", 6)])
@pytest.mark.parametrize("t", [1, 2])
def test_design_identity(family, dim, t):
    assert verify_rigged_design(family, t, dim) < 1e-12


def test_phase_alphas():
    ident = design_id("phase")
    assert ident.alpha(1) == pytest.approx(PI + 0.5)
    assert ident.alpha(2) == 1.0
    prob = design_id("phase", "probability")
    assert prob.alpha(1) == 1.0
    assert prob.alpha(2) == pytest.approx(1 / (PI + 0.5))
    assert verify_rigged_design("phase", 1, 8, "probability") < 1e-12
    assert verify_rigged_design("phase", 2, 8, "probability") < 1e-12


def test_probability_convention_only_for_phase():
    with pytest.raises(ValueError):
        design_id("cos", "probability")


def test_rotated_other_gamma():
    assert verify_rigged_design("rotated", 2, 5, gamma=1.3) < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_design_operator_psd(family):
    op = design_operator(family, 2, 5)
    assert np.allclose(op.matrix, op.matrix.conj().T)
    assert np.linalg.eigvalsh(op.matrix).min() > -1e-12


def test_unknown_family():
    with pytest.raises(UnknownFamilyError):
        verify_rigged_design("tan", 2, 4)
    with pytest.raises(ValueError):
        verify_rigged_design("phase", 3, 4)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["phase", "cos", "sin"]), st.tuples(*[st.integers(0, 8)] * 4))
def test_exact_value_structure(family, idx):
    # zero unless both the sum and the sum of squares are conserved
    a, b, c, d = idx
    val = rigged2_exact_element(family, a, b, c, d)
    if {a, b} != {c, d}:
        assert val == 0
    assert val == rigged2_exact_element(family, c, d, a, b)
    assert val == rigged2_exact_element(family, b, a, c, d)
