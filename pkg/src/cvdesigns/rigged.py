"""Non-normalizable Kerred phase, cosine, sine and rotated state families.

Every family has Fock coefficients of the form A_n(theta) * exp(i phi n^2), so
each (theta, phi) double integral splits into two one-dimensional integrals.
That makes the exact matrix elements finite sums of Kronecker deltas and lets
the trapezoid quadrature be evaluated axis by axis.

Sign convention: ``sign=+1`` is the form with exp(+i phi n^2). ``sign=-1`` is
its complex conjugate. The phase family defaults to -1, the others to +1.
Every 2-design identity is invariant under the flip.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock_core import (
    ComplexOperator,
    TruncatedSpace,
    check_side,
    symmetric_projector,
)

FAMILIES = ("phase", "cos", "sin", "rotated")
PI = math.pi


class UnknownFamilyError(ValueError):
    pass


class InsufficientGridWarning(UserWarning):
    pass


def _check_family(family):
    if family not in FAMILIES:
        raise UnknownFamilyError(f"unknown family {family!r}; expected one of {FAMILIES}")


def default_sign(family):
    return -1 if family == "phase" else 1


@dataclass(frozen=True)
class RiggedState:
    family: str
    theta: float
    phi: float
    gamma: float = 0.0
    sign: int | None = None

    def __post_init__(self):
        _check_family(self.family)
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("angles must be finite")
        if not 0.0 <= self.gamma < 2 * PI:
            raise ValueError("gamma must lie in [0, 2pi)")
        if self.sign not in (None, 1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class RiggedDesignId:
    """Measure sum_n fock_prefactor (|n><n|)^t + integral_prefactor * integral.

    The integral runs over theta_range x phi_range with Lebesgue measure.
    """

    family: str
    convention: str
    fock_prefactor: float
    integral_prefactor: float
    theta_range: tuple
    phi_range: tuple
    alpha1: float
    alpha2: float
    includes_fock: bool = True

    def alpha(self, t):
        return {1: self.alpha1, 2: self.alpha2}[t]


def design_id(family, convention="rigged"):
    """Measure parameters for a shipped design.

    ``"rigged"`` uses the prefactors 1/2 (phase) or 1/4 (cos, sin) in front of
    both the Fock sum and the integral. ``"probability"`` is the unit-mass phase
    design that the shadow protocol samples from.
    """
    _check_family(family)
    full = (-PI, PI)
    if convention == "probability":
        if family != "phase":
            raise ValueError("the probability convention is defined for the phase family only")
        return RiggedDesignId(family, convention, 1 / (2 * PI + 1), 1 / (2 * PI + 1),
                              (0.0, 2 * PI), (0.0, 2 * PI), 1.0, 1 / (PI + 0.5))
    if convention != "rigged":
        raise ValueError(f"unknown convention {convention!r}")
    if family == "phase":
        return RiggedDesignId(family, convention, 0.5, 0.5, full, full, PI + 0.5, 1.0)
    if family == "cos":
        return RiggedDesignId(family, convention, 0.25, 0.25, (0.0, PI), full, (2 * PI + 1) / 4, 1.0)
    if family == "sin":
        return RiggedDesignId(family, convention, 0.25, 0.25, (-PI / 2, PI / 2), full, (2 * PI + 1) / 4, 1.0)
    # rotated states are scaled by 1/sqrt(8) and integrated over the full period
    return RiggedDesignId(family, convention, 0.25, 2 / PI**2, full, full, 2.25, 1.0)


def theta_factor(family, n, theta, gamma=0.0):
    """A_n(theta) for the +1 sign form. Broadcasts over n and theta."""
    _check_family(family)
    n = np.asarray(n)
    theta = np.asarray(theta, dtype=float)
    k = n + 1
    if family == "phase":
        return np.exp(1j * n * theta) / math.sqrt(2 * PI)
    if family == "cos":
        return math.sqrt(2 / PI) * np.sin(k * theta) + 0j
    if family == "sin":
        return (np.exp(1j * k * theta) - np.exp(-1j * k * (theta - PI))) / math.sqrt(2 * PI)
    return (np.exp(1j * k * theta) - np.exp(-1j * k * (theta - gamma))) / math.sqrt(8)


def rigged_coefficient(state, n):
    """<n|chi> for the state described by ``state``."""
    sign = default_sign(state.family) if state.sign is None else state.sign
    n = np.asarray(n)
    val = theta_factor(state.family, n, state.theta, state.gamma) * np.exp(1j * state.phi * n * n)
    return val if sign == 1 else np.conj(val)


# ---------------------------------------------------------------- exact

def _delta(*xs):
    first = xs[0]
    out = np.ones(np.broadcast(*xs).shape, dtype=bool)
    for x in xs[1:]:
        out &= first == x
    return out


def pi2_element(a, b, c, d):
    """<ab|Pi_2|cd>, broadcasting."""
    return 0.5 * (_delta(a, c) & _delta(b, d)) + 0.5 * (_delta(a, d) & _delta(b, c))


def _rotated_exact(a, b, c, d, gamma):
    """Sign-pattern expansion of the rotated-family integral over [-pi, pi]^2."""
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x) for x in (a, b, c, d)))
    kerr = _delta(a * a + b * b, c * c + d * d)
    total = np.zeros(a.shape, dtype=np.complex128)
    for sa, sb, sc, sd in itertools.product((1, -1), repeat=4):
        freq = sa * (a + 1) + sb * (b + 1) - sc * (c + 1) - sd * (d + 1)
        coef = np.ones(a.shape, dtype=np.complex128)
        for s, n, ket in ((sa, a, True), (sb, b, True), (sc, c, False), (sd, d, False)):
            if s == -1:
                rot = np.exp(1j * gamma * (n + 1))
                coef = coef * -(rot if ket else np.conj(rot))
        total += np.where((freq == 0) & kerr, coef, 0)
    return (2 * PI) ** 2 * total / 64


def rigged2_exact_element(family, a, b, c, d, gamma=0.0):
    """Closed form of the double integral of <a|chi><b|chi><chi|c><chi|d>.

    Phase family: 2 Pi_2 - delta_abcd. Cos and sin: 4 Pi_2 - delta_abcd.
    The value does not depend on the sign convention. Broadcasts over indices.
    """
    _check_family(family)
    idx = [np.asarray(x) for x in (a, b, c, d)]
    if any(np.any(x < 0) for x in idx):
        raise ValueError("Fock indices must be nonnegative")
    diag = _delta(*idx).astype(float)
    if family == "phase":
        out = 2 * pi2_element(*idx) - diag
    elif family in ("cos", "sin"):
        out = 4 * pi2_element(*idx) - diag
    else:
        out = _rotated_exact(*idx, gamma)
        if np.max(np.abs(np.imag(out)), initial=0.0) < 1e-12:
            out = np.real(out)
    return out.item() if np.ndim(out) == 0 else out


def rigged1_exact_element(family, a, c, gamma=0.0):
    """Double integral of <a|chi><chi|c>."""
    _check_family(family)
    val = PI**2 if family == "rotated" else 2 * PI
    return val * _delta(np.asarray(a), np.asarray(c)).astype(float)


# ---------------------------------------------------------------- quadrature

def max_frequency(max_index):
    """Largest integrand frequency per axis, in units of the axis period."""
    return max(2 * max_index * max_index, 4 * (max_index + 1))


def default_grid(max_index):
    return max(4 * max_index * max_index + 1, max_frequency(max_index) + 1)


def _grid(interval, points):
    lo, hi = interval
    return lo + (hi - lo) * np.arange(points) / points, (hi - lo) / points


def _check_grid(points, max_index):
    need = max_frequency(max_index)
    if points <= need:
        warnings.warn(f"{points} grid points may not resolve frequency {need}", InsufficientGridWarning, stacklevel=3)


def rigged2_quadrature_element(family, a, b, c, d, grid_points=None, gamma=0.0, sign=None, convention="rigged"):
    """Trapezoid rule for the double integral on a full 2D grid.

    The integrands are trigonometric polynomials that are periodic on the
    stated ranges, so the periodic trapezoid rule is exact once the grid
    exceeds the highest frequency.
    """
    _check_family(family)
    sign = default_sign(family) if sign is None else sign
    top = max(a, b, c, d)
    points = default_grid(top) if grid_points is None else int(grid_points)
    _check_grid(points, top)
    ident = design_id(family, "rigged") if convention == "rigged" else design_id(family, convention)
    theta, wt = _grid(ident.theta_range, points)
    phi, wp = _grid(ident.phi_range, points)
    th, ph = np.meshgrid(theta, phi, indexing="ij")

    def coef(n):
        val = theta_factor(family, n, th, gamma) * np.exp(1j * ph * n * n)
        return val if sign == 1 else np.conj(val)

    integrand = coef(a) * coef(b) * np.conj(coef(c)) * np.conj(coef(d))
    return complex(integrand.sum() * wt * wp)


def _axis_tensor(values, weight):
    """T[a,b,c,d] = weight * sum_k v[k,a] v[k,b] conj(v[k,c]) conj(v[k,d])."""
    pair = np.einsum("ka,kb->kab", values, values)
    k = values.shape[0]
    flat = pair.reshape(k, -1)
    return (weight * flat.T @ flat.conj()).reshape((values.shape[1],) * 4)


def rigged2_quadrature_tensor(family, dim, grid_points=None, gamma=0.0, sign=None):
    """Quadrature values for all index 4-tuples below ``dim``.

    Uses the same grid as :func:`rigged2_quadrature_element`; the 2D
    trapezoid sum factorizes into a theta sum times a phi sum.
    """
    _check_family(family)
    check_side(dim, 2)
    sign = default_sign(family) if sign is None else sign
    top = dim - 1
    points = default_grid(top) if grid_points is None else int(grid_points)
    _check_grid(points, top)
    ident = design_id(family, "rigged")
    n = np.arange(dim)
    theta, wt = _grid(ident.theta_range, points)
    phi, wp = _grid(ident.phi_range, points)
    a_th = theta_factor(family, n[None, :], theta[:, None], gamma)
    b_ph = np.exp(1j * phi[:, None] * (n * n)[None, :])
    if sign == -1:
        a_th, b_ph = a_th.conj(), b_ph.conj()
    return _axis_tensor(a_th, wt) * _axis_tensor(b_ph, wp)


def rigged2_exact_tensor(family, dim, gamma=0.0):
    n = np.arange(dim)
    a, b, c, d = np.meshgrid(n, n, n, n, indexing="ij")
    return np.asarray(rigged2_exact_element(family, a, b, c, d, gamma))


# ---------------------------------------------------------------- assembly

def design_operator(family, t, dim, convention="rigged", gamma=0.0):
    """The measure's t-th moment restricted to Fock indices below ``dim``."""
    ident = design_id(family, convention)
    scale = ident.integral_prefactor
    n = np.arange(dim)
    if t == 1:
        mat = ident.fock_prefactor * np.eye(dim) + scale * rigged1_exact_element(family, n[:, None], n[None, :], gamma)
        return ComplexOperator(TruncatedSpace(dim), 1, mat, hermitian=True)
    if t != 2:
        raise ValueError("only t = 1 and t = 2 are available")
    check_side(dim, 2)
    a, b, c, d = np.meshgrid(n, n, n, n, indexing="ij")
    fock = _delta(a, b, c, d).astype(float)
    integral = np.asarray(rigged2_exact_element(family, a, b, c, d, gamma))
    tensor = ident.fock_prefactor * fock + scale * integral
    return ComplexOperator(TruncatedSpace(dim), 2, tensor.reshape(dim * dim, dim * dim), hermitian=True)


def verify_rigged_design(family, t, dim, convention="rigged", gamma=0.0):
    """Largest element error between the assembled moment and alpha_t Pi_t."""
    if t not in (1, 2):
        raise ValueError("only t = 1 and t = 2 are available")
    ident = design_id(family, convention)
    op = design_operator(family, t, dim, convention, gamma)
    target = ident.alpha(t) * symmetric_projector(TruncatedSpace(dim), t).matrix
    return float(np.max(np.abs(op.matrix - target)))


def cos_claim_counterexamples(limit=50):
    """Integer solutions of a^2+b^2 = c^2+d^2 with a = b+c+d+2 and entries <= limit."""
    n = np.arange(limit + 1)
    b, c, d = np.meshgrid(n, n, n, indexing="ij")
    a = b + c + d + 2
    hit = (a <= limit) & (a * a + b * b == c * c + d * d)
    return [tuple(int(x) for x in row) for row in np.stack([a[hit], b[hit], c[hit], d[hit]], axis=1)]
