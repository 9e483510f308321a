"""Cubature on the probability simplex and the flat torus.

Simplex points are probability vectors of length m+1, torus points are angle
vectors of length m reduced to [0, 2pi). Both live in :class:`WeightedPointSet`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi
MAX_POINTS = 2_000_000
WEIGHT_SUM_TOL = 1e-12

KINDS = ("simplex", "torus", "state")


class DesignError(ValueError):
    """Malformed or incompatible point sets."""


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Points with strictly positive weights.

    ``points`` is a 2D array with one point per row. For ``kind="state"`` the
    rows are complex amplitude vectors.
    """

    kind: str
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DesignError(f"unknown point kind {self.kind!r}")
        dtype = np.complex128 if self.kind == "state" else np.float64
        pts = np.array(self.points, dtype=dtype, ndmin=2)
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise DesignError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if np.any(~(w > 0)):
            raise DesignError("weights must be strictly positive")
        if self.kind == "torus":
            pts = np.mod(pts, TWO_PI)
            pts[np.isclose(pts, TWO_PI, rtol=0, atol=1e-14)] = 0.0
        if self.kind == "simplex":
            if np.any(pts < -1e-12) or np.any(pts > 1 + 1e-12):
                raise DesignError("simplex coordinates must lie in [0, 1]")
            if np.any(np.abs(pts.sum(axis=1) - 1) > 1e-12):
                raise DesignError("simplex points must sum to 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        """Number of coordinates per point."""
        return self.points.shape[1]

    @property
    def total_weight(self):
        return float(self.weights.sum())

    @property
    def is_normalized(self):
        return abs(self.total_weight - 1.0) <= WEIGHT_SUM_TOL

    def to_dict(self):
        if self.kind == "state":
            pts = [[[float(z.real), float(z.imag)] for z in row] for row in self.points]
            return {"kind": "state", "dim": self.dim, "states": pts, "weights": self.weights.tolist()}
        return {"kind": self.kind, "points": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind", "state" if "states" in data else None)
        if kind == "state":
            raw = np.asarray(data["states"] if "states" in data else data["points"], dtype=float)
            if raw.ndim != 3 or raw.shape[2] != 2:
                raise DesignError("state amplitudes must be [re, im] pairs")
            pts = raw[..., 0] + 1j * raw[..., 1]
            if "dim" in data and pts.shape[1] != int(data["dim"]):
                raise DesignError(f"declared dim {data['dim']} but states have {pts.shape[1]} amplitudes")
            return cls("state", pts, data["weights"])
        return cls(kind, data["points"], data["weights"])

    def to_json(self, path=None, indent=None):
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def _require_kind(ens, kind):
    if ens.kind != kind:
        raise DesignError(f"expected {kind} points, got {ens.kind}")


# ---------------------------------------------------------------- simplex

def simplex_moment(beta):
    """Uniform-measure moment of prod p_i^beta_i over the m-simplex."""
    beta = [int(b) for b in beta]
    if len(beta) < 2:
        raise DesignError("need m >= 1, i.e. at least two coordinates")
    if any(b < 0 for b in beta):
        raise DesignError("exponents must be nonnegative")
    m = len(beta) - 1
    log_val = math.lgamma(m + 1) + sum(math.lgamma(b + 1) for b in beta) - math.lgamma(m + sum(beta) + 1)
    return math.exp(log_val)


def _vertices(m):
    return np.eye(m + 1)


def simplex_centroid_1design(m):
    return WeightedPointSet("simplex", np.full((1, m + 1), 1.0 / (m + 1)), [1.0])


def simplex_extremal_1design(m):
    return WeightedPointSet("simplex", _vertices(m), np.full(m + 1, 1.0 / (m + 1)))


def simplex_extremal_centroid_2design(m):
    """Vertices plus the centroid."""
    if m < 1:
        raise DesignError("m must be >= 1")
    pts = np.vstack([np.full((1, m + 1), 1.0 / (m + 1)), _vertices(m)])
    w = np.concatenate([[(m + 1) / (m + 2)], np.full(m + 1, 1.0 / ((m + 1) * (m + 2)))])
    return WeightedPointSet("simplex", pts, w)


def simplex_hammer_stroud_2design(m):
    """m+1 equal-weight points pulled toward the centroid by r = 1/sqrt(m+2)."""
    if m < 1:
        raise DesignError("m must be >= 1")
    r = 1.0 / math.sqrt(m + 2)
    pts = r * _vertices(m) + (1 - r) / (m + 1)
    return WeightedPointSet("simplex", pts, np.full(m + 1, 1.0 / (m + 1)))


def monomial_average(ens, exponents):
    _require_kind(ens, "simplex")
    vals = np.prod(ens.points ** np.asarray(exponents), axis=1)
    return float(ens.weights @ vals)


def verify_simplex_design(ens, t):
    """Largest monomial error over all degree-t index tuples.

    Index tuples are swept as sorted multisets, which covers every monomial once.
    """
    _require_kind(ens, "simplex")
    if t < 0:
        raise DesignError("t must be >= 0")
    n = ens.dim
    worst = 0.0
    for combo in itertools.combinations_with_replacement(range(n), t):
        beta = np.bincount(np.asarray(combo, dtype=int), minlength=n)
        err = abs(monomial_average(ens, beta) - simplex_moment(beta))
        worst = max(worst, err)
    return worst


def dirichlet_moment_mc(beta, samples=1_000_000, seed=0, chunk=200_000):
    """Monte Carlo estimate of a simplex moment via flat Dirichlet draws."""
    beta = np.asarray(beta, dtype=float)
    rng = np.random.default_rng(seed)
    total = 0.0
    left = samples
    while left > 0:
        k = min(chunk, left)
        p = rng.dirichlet(np.ones(beta.size), size=k)
        total += np.prod(p ** beta, axis=1).sum()
        left -= k
    return total / samples


# ---------------------------------------------------------------- torus

def smallest_prime_above(n):
    p = int(n) + 1
    while True:
        if p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1)):
            return p
        p += 1


def is_prime(n):
    return n >= 2 and all(n % q for q in range(2, math.isqrt(n) + 1))


def torus_cycle_1design(m):
    """m equally spaced shifts of the point (0, 2pi/m, 2*2pi/m, ...)."""
    if m < 1:
        raise DesignError("m must be >= 1")
    j = np.arange(m)
    pts = TWO_PI * np.outer(j, j) / m
    return WeightedPointSet("torus", pts, np.full(m, 1.0 / m))


def torus_product_tdesign(m, t):
    """Product grid of the (t+1)-point uniform design on each circle."""
    if m < 1 or t < 1:
        raise DesignError("m and t must be >= 1")
    count = (t + 1) ** m
    if count > MAX_POINTS:
        raise DesignError(f"{count} points exceeds the cap of {MAX_POINTS}")
    axis = TWO_PI * np.arange(t + 1) / (t + 1)
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    return WeightedPointSet("torus", pts, np.full(count, 1.0 / count))


def torus_prime_2design(m, p=None):
    """p^2 points with angles 2pi(q1 j + q2 j^2)/p for j = 0..m-1.

    By default p is the smallest prime above max(2, m). A larger odd prime may be
    passed explicitly.
    """
    if m < 1:
        raise DesignError("m must be >= 1")
    if p is None:
        p = smallest_prime_above(max(2, m))
    elif not is_prime(p) or p < 3 or p < m:
        raise DesignError(f"p={p} must be an odd prime >= {m}")
    j = np.arange(m)
    q1, q2 = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    phase = np.mod(np.outer(q1.reshape(-1), j) + np.outer(q2.reshape(-1), j * j), p)
    return WeightedPointSet("torus", TWO_PI * phase / p, np.full(p * p, 1.0 / (p * p)))


def _multiset_phases(angles, t):
    """Z[:, k] = exp(i * sum of the angles in the k-th size-t multiset)."""
    m = angles.shape[1]
    combos = np.array(list(itertools.combinations_with_replacement(range(m), t)), dtype=int)
    if combos.size == 0:
        return np.ones((angles.shape[0], 1), dtype=np.complex128), combos
    summed = angles[:, combos].sum(axis=2)
    return np.exp(1j * summed), combos


def verify_torus_design(ens, t):
    """Largest error over balanced moments exp(i(sum theta_a - sum theta_b)).

    The exact torus integral is 1 when the multisets a and b coincide and 0
    otherwise, so the Gram matrix of multiset phases must be the identity.
    """
    _require_kind(ens, "torus")
    if t < 1:
        raise DesignError("t must be >= 1")
    count = math.comb(ens.dim + t - 1, t)
    if count > 20_000:
        raise DesignError(f"{count} multisets is too many to sweep")
    z, _ = _multiset_phases(ens.points, t)
    gram = z.T @ (ens.weights[:, None] * z.conj())
    return float(np.max(np.abs(gram - np.eye(count))))


def diophantine_solutions(range_max):
    """All (a,b,c,d) in [0, range_max]^4 with equal sums and equal sums of squares.

    Raises if any solution is not a pairing {a,b} = {c,d}.
    """
    if range_max < 1:
        raise DesignError("range_max must be >= 1")
    sols = _kernels.diophantine_solutions(int(range_max))
    paired = ((sols[:, 0] == sols[:, 2]) & (sols[:, 1] == sols[:, 3])) | (
        (sols[:, 0] == sols[:, 3]) & (sols[:, 1] == sols[:, 2])
    )
    if not np.all(paired):
        bad = sols[~paired][0]
        raise AssertionError(f"unpaired solution {tuple(bad)}")
    return [tuple(int(x) for x in row) for row in sols]


def torus_min_size_bound(m):
    return m * (m - 1) + 1


def torus_min_size_check(ens, m=None):
    _require_kind(ens, "torus")
    m = ens.dim if m is None else m
    return len(ens) >= torus_min_size_bound(m)


# ---------------------------------------------------------------- MUBs

def mub_phase_table(n):
    """Phases theta[i, j, k] of component k of vector j in basis i.

    Odd primes use 2pi(jk + ik^2)/n. For n = 2 the Pauli table pi*jk + (pi/2)ik^2
    is used, since the quadratic form does not give MUBs in characteristic 2.
    Together with the computational basis these are n+1 bases.
    """
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    if n == 2:
        return np.mod(math.pi * j * k + 0.5 * math.pi * i * k * k, TWO_PI)
    if not is_prime(n):
        raise DesignError("phase tables are only provided for primes")
    return TWO_PI * np.mod(j * k + i * k * k, n) / n


def check_mub_equivalence(thetas, n, tol=1e-10):
    """(orthonormal, design_condition) for an n x n x n phase table.

    Condition 1 asks every basis to be orthonormal. Condition 2 is the
    quartic torus-design sum over the n phase vectors of all n bases, which must
    equal the pairing indicator.
    """
    th = np.asarray(thetas, dtype=float)
    if th.shape != (n, n, n):
        raise DesignError(f"expected an ({n},{n},{n}) table, got {th.shape}")
    z = np.exp(1j * th)
    overlaps = np.einsum("ijl,ikl->ijk", z, z.conj()) / n
    cond1 = bool(np.max(np.abs(overlaps - np.eye(n)[None])) <= tol)
    ens = WeightedPointSet("torus", th.reshape(n * n, n), np.full(n * n, 1.0 / (n * n)))
    cond2 = verify_torus_design(ens, 2) <= tol
    return cond1, bool(cond2)
