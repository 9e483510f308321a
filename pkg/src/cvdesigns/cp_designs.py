"""Complex-projective designs built from simplex and torus cubature."""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .classical_designs import (
    DesignError,
    WeightedPointSet,
    smallest_prime_above,
    torus_prime_2design,
)
from .fock_core import (
    ComplexOperator,
    TruncatedSpace,
    check_side,
    symmetric_projector,
    symmetric_trace,
)

MERGE_TOL = 1e-10
NORM_TOL = 1e-12


class CPDesign:
    """Normalized states (rows of ``states``) with weights summing to one."""

    def __init__(self, states, weights, check=True):
        states = np.array(states, dtype=np.complex128, ndmin=2)
        weights = np.array(weights, dtype=float).reshape(-1)
        if states.shape[0] != weights.shape[0]:
            raise DesignError(f"{states.shape[0]} states but {weights.shape[0]} weights")
        if check:
            if np.any(~(weights > 0)):
                raise DesignError("weights must be strictly positive")
            if abs(weights.sum() - 1) > 1e-12:
                raise DesignError(f"weights sum to {weights.sum():.15g}, not 1")
            norms = np.linalg.norm(states, axis=1)
            if np.any(np.abs(norms - 1) > NORM_TOL):
                raise DesignError("states must be normalized")
        states.setflags(write=False)
        weights.setflags(write=False)
        self.states = states
        self.weights = weights

    def __len__(self):
        return self.weights.shape[0]

    def __repr__(self):
        return f"CPDesign(dim={self.dim}, size={len(self)})"

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def space(self):
        return TruncatedSpace(self.dim)

    def to_point_set(self):
        return WeightedPointSet("state", self.states, self.weights)

    def to_dict(self):
        return self.to_point_set().to_dict()

    def to_json(self, path=None, indent=None):
        return self.to_point_set().to_json(path, indent)

    @classmethod
    def from_point_set(cls, ens):
        if ens.kind != "state":
            raise DesignError(f"expected state points, got {ens.kind}")
        return cls(ens.points, ens.weights)

    @classmethod
    def from_dict(cls, data):
        return cls.from_point_set(WeightedPointSet.from_dict(data))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def simplex_torus_state(p, phases):
    return np.sqrt(np.clip(p, 0.0, None)) * np.exp(1j * np.asarray(phases))


def merge_states(states, weights, tol=MERGE_TOL):
    """Combine states equal up to global phase, summing their weights.

    The first representative of each class is kept.
    """
    states = np.asarray(states, dtype=np.complex128)
    weights = np.asarray(weights, dtype=float)
    keep_states = []
    keep_weights = []
    reps = np.empty((0, states.shape[1]), dtype=np.complex128)
    for psi, w in zip(states, weights):
        if reps.shape[0]:
            fid = np.abs(reps.conj() @ psi)
            hit = np.flatnonzero(fid > 1 - tol)
            if hit.size:
                keep_weights[hit[0]] += w
                continue
        reps = np.vstack([reps, psi[None]])
        keep_states.append(psi)
        keep_weights.append(w)
    return np.array(keep_states), np.array(keep_weights)


def cp_from_simplex_torus(simplex, torus, t=None, merge=True):
    """All products |p, phi> = sum_j sqrt(p_j) e^{i phi_j} |j> with weight u(p) v(phi).

    A torus on d-1 angles is read with phi_0 = 0. A torus on d angles is
    shifted so that phi_0 = 0, which only changes a global phase.
    ``t`` is accepted for symmetry with the verifiers and is not used.
    """
    if simplex.kind != "simplex" or torus.kind != "torus":
        raise DesignError("need a simplex set and a torus set")
    d = simplex.dim
    if torus.dim == d - 1:
        angles = np.hstack([np.zeros((len(torus), 1)), torus.points])
    elif torus.dim == d:
        angles = torus.points - torus.points[:, :1]
    else:
        raise DesignError(f"simplex has {d} coordinates but torus has {torus.dim} angles")
    amps = np.sqrt(np.clip(simplex.points, 0.0, None))
    phases = np.exp(1j * angles)
    states = (amps[:, None, :] * phases[None, :, :]).reshape(-1, d)
    weights = np.outer(simplex.weights, torus.weights).reshape(-1)
    if merge:
        states, weights = merge_states(states, weights)
    weights = weights / weights.sum()
    return CPDesign(states, weights)


def construction1_mub_design(d):
    """Computational basis plus the p^2 quadratic-phase states on d levels."""
    if d < 2:
        raise DesignError("d must be >= 2")
    m = d - 1
    p = smallest_prime_above(max(2, m))
    basis = np.eye(d, dtype=np.complex128)
    torus = torus_prime_2design(d, p=p)
    phase = np.exp(1j * torus.points) / math.sqrt(d)
    states = np.vstack([basis, phase])
    weights = np.concatenate([
        np.full(d, 1.0 / ((m + 1) * (m + 2))),
        np.full(p * p, (m + 1) / ((m + 2) * p * p)),
    ])
    return CPDesign(states, weights)


def construction2_uniform_design(d):
    """d*p^2 states: Hammer-Stroud amplitudes times prime-torus phases."""
    if d < 2:
        raise DesignError("d must be >= 2")
    m = d - 1
    p = smallest_prime_above(max(2, m))
    r = 1.0 / math.sqrt(m + 2)
    big = math.sqrt((1 + r * m) / (m + 1))
    small = math.sqrt((1 - r) / (m + 1))
    torus = torus_prime_2design(d, p=p)
    phases = np.exp(1j * torus.points)
    amps = np.full((d, d), small)
    np.fill_diagonal(amps, big)
    states = (amps[:, None, :] * phases[None, :, :]).reshape(-1, d)
    return CPDesign(states, np.full(d * p * p, 1.0 / (d * p * p)))


def design_moment(design, t):
    """sum_psi w (|psi><psi|)^{(x) t} as a dense matrix."""
    check_side(design.dim, t)
    vecs = design.states
    for _ in range(t - 1):
        vecs = np.einsum("ki,kj->kij", vecs, design.states).reshape(len(design), -1)
    return (vecs.T * design.weights) @ vecs.conj()


def verify_cp_design(design, t, norm="spectral"):
    """Distance between the t-th moment and Pi_t / Tr Pi_t.

    ``norm="spectral"`` gives the operator norm, ``norm="max"`` the largest
    matrix element.
    """
    if t < 1:
        raise DesignError("t must be >= 1")
    diff = design_moment(design, t) - symmetric_projector(design.space, t).matrix / symmetric_trace(design.dim, t)
    if norm == "spectral":
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
    if norm == "max":
        return float(np.max(np.abs(diff)))
    raise ValueError(f"unknown norm {norm!r}")


def born_project(design, tol=MERGE_TOL):
    """Probability vectors |<j|psi>|^2 with coincident points merged."""
    probs = np.abs(design.states) ** 2
    probs = probs / probs.sum(axis=1, keepdims=True)
    pts = []
    weights = []
    for p, w in zip(probs, design.weights):
        for k, q in enumerate(pts):
            if np.max(np.abs(q - p)) <= tol:
                weights[k] += w
                break
        else:
            pts.append(p)
            weights.append(w)
    return WeightedPointSet("simplex", np.array(pts), np.array(weights))


# ---------------------------------------------------------------- constrained

def constrained_extremal_points(d, N, exact=False):
    """Extremal probability vectors on d levels with mean occupation N.

    Returns d-1 points. With ``exact=True`` the points are Fractions and
    ``N`` should be rational.
    """
    if d < 2:
        raise DesignError("d must be >= 2")
    num = Fraction(N) if exact else float(N)
    if not 0 <= num <= d - 1:
        raise DesignError(f"N={N} outside [0, {d - 1}]")
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    points = []
    for i in range(d - 1):
        q = [zero] * d
        if i + 1 >= num:
            s = num / (i + 1)
            q[0] += one - s
            q[i + 1] += s
        else:
            s = (num - i - 1) / (d - i - 2)
            q[i + 1] += one - s
            q[d - 1] += s
        points.append(q)
    if exact:
        return points
    return [np.array(q) for q in points]


def mean_occupation(q):
    return sum(j * x for j, x in enumerate(q))


def harmonic_number(k):
    return sum(1.0 / j for j in range(1, k + 1))


def constrained_first_moment(d, N=1):
    """Unit-trace first moment of the N=1 constrained ensemble.

    Diagonal (1 - H_{d-1}/(d-1), 1/(d-1), 1/(2(d-1)), ..., 1/((d-1)^2)).
    """
    if d < 2:
        raise DesignError("d must be >= 2")
    if N != 1:
        raise DesignError("only N = 1 has a closed form")
    diag = np.empty(d)
    diag[0] = 1 - harmonic_number(d - 1) / (d - 1)
    diag[1:] = 1.0 / ((d - 1) * np.arange(1, d))
    diag /= diag.sum()
    return ComplexOperator(TruncatedSpace(d), 1, np.diag(diag), hermitian=True)


def constrained_first_moment_mc(d, N=1, samples=1_000_000, seed=0, chunk=200_000):
    """Uniform barycentric weights over the extremal points.

    Phases average out, so the first moment is the mean probability vector.
    """
    verts = np.array(constrained_extremal_points(d, N))
    rng = np.random.default_rng(seed)
    total = np.zeros(d)
    left = samples
    while left > 0:
        k = min(chunk, left)
        lam = rng.dirichlet(np.ones(len(verts)), size=k)
        total += (lam @ verts).sum(axis=0)
        left -= k
    diag = total / samples
    return diag / diag.sum()

