"""Classical shadows from the Fock plus Kerred-phase measurement.

With probability 1/(2pi+1) the state is measured in the Fock basis. Otherwise
phi is drawn uniformly from [0, 2pi) and theta from the density
<theta|rho|theta>_phi. Each outcome chi stands for the operator
(2pi+1)|chi><chi| - I, an unbiased estimate of rho.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fock_core import as_matrix
from .rigged import design_id

TWO_PI = 2.0 * math.pi
FOCK_PROBABILITY = 1.0 / (TWO_PI + 1.0)
DEFAULT_GRID = 4096
DEFAULT_SIGN = -1

#: magnitude bound quoted for |a><b| + |b><a| estimates under another normalization
QUOTED_FLIP_PAIR_BOUND = 1.0 / 5.0
#: quoted bound on the third-moment term for |a><b| + |b><a|
QUOTED_FLIP_PAIR_THIRD_MOMENT = 2.0 / (math.pi * (TWO_PI + 1.0))


class ShadowError(ValueError):
    pass


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class ShadowRecord:
    branch: str
    n: int = -1
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.branch not in ("fock", "phase"):
            raise ShadowError(f"unknown branch {self.branch!r}")
        if self.branch == "fock" and self.n < 0:
            raise ShadowError("Fock records need n >= 0")
        if self.branch == "phase" and not (0 <= self.theta < TWO_PI and 0 <= self.phi < TWO_PI):
            raise ShadowError("angles must lie in [0, 2pi)")

    @classmethod
    def fock(cls, n):
        return cls("fock", n=int(n))

    @classmethod
    def phase(cls, theta, phi):
        return cls("phase", theta=float(theta) % TWO_PI, phi=float(phi) % TWO_PI)


@dataclass(frozen=True, eq=False)
class ShadowBatch:
    """Columnar storage for many records."""

    is_fock: np.ndarray
    n: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    sign: int = DEFAULT_SIGN

    def __len__(self):
        return self.is_fock.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return ShadowBatch(self.is_fock[i], self.n[i], self.theta[i], self.phi[i], self.sign)
        if self.is_fock[i]:
            return ShadowRecord.fock(self.n[i])
        return ShadowRecord.phase(self.theta[i], self.phi[i])

    @classmethod
    def from_records(cls, records, sign=DEFAULT_SIGN):
        is_fock = np.array([r.branch == "fock" for r in records], dtype=bool)
        return cls(
            is_fock,
            np.array([r.n for r in records], dtype=np.int64),
            np.array([r.theta for r in records], dtype=float),
            np.array([r.phi for r in records], dtype=float),
            sign,
        )

    def split(self, k):
        """k consecutive sub-batches of equal size."""
        size = len(self) // k
        return [self[j * size:(j + 1) * size] for j in range(k)]


# ---------------------------------------------------------------- observables

@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian observable: ``dense``, ``diagonal``, ``flip`` or ``flip_diag``."""

    form: str
    data: object = None
    a: int = -1
    b: int = -1
    c: int = -1

    @classmethod
    def dense(cls, matrix):
        mat = np.asarray(as_matrix(matrix), dtype=np.complex128)
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > 1e-12:
            raise ShadowError("observable must be Hermitian")
        return cls("dense", mat)

    @classmethod
    def diagonal(cls, values):
        return cls("diagonal", np.asarray(values, dtype=float))

    @classmethod
    def flip_pair(cls, a, b):
        if a == b or a < 0 or b < 0:
            raise ShadowError("flip pairs need two distinct nonnegative indices")
        return cls("flip", a=int(a), b=int(b))

    @classmethod
    def flip_pair_plus_diag(cls, a, b, c):
        if a == b or min(a, b, c) < 0:
            raise ShadowError("flip pairs need two distinct nonnegative indices")
        return cls("flip_diag", a=int(a), b=int(b), c=int(c))

    @property
    def structured(self):
        return self.form in ("flip", "flip_diag")

    @property
    def max_index(self):
        if self.structured:
            return max(self.a, self.b, self.c)
        return len(self.data) - 1

    def matrix(self, dim):
        if self.max_index >= dim:
            raise ShadowError(f"observable needs at least {self.max_index + 1} levels")
        out = np.zeros((dim, dim), dtype=np.complex128)
        if self.form == "dense":
            n = self.data.shape[0]
            out[:n, :n] = self.data
        elif self.form == "diagonal":
            out[np.arange(len(self.data)), np.arange(len(self.data))] = self.data
        else:
            out[self.a, self.b] = out[self.b, self.a] = 1.0
            if self.form == "flip_diag":
                out[self.c, self.c] += 1.0
        return out

    def trace(self):
        if self.form == "dense":
            return float(np.real(np.trace(self.data)))
        if self.form == "diagonal":
            return float(np.sum(self.data))
        return 1.0 if self.form == "flip_diag" else 0.0

    def expectation(self, rho):
        rho = as_matrix(rho)
        return float(np.real(np.trace(rho @ self.matrix(rho.shape[0]))))

    def to_dict(self):
        if self.form == "dense":
            return {"form": "dense", "re": np.real(self.data).tolist(), "im": np.imag(self.data).tolist()}
        if self.form == "diagonal":
            return {"form": "diagonal", "values": self.data.tolist()}
        out = {"form": self.form, "a": self.a, "b": self.b}
        if self.form == "flip_diag":
            out["c"] = self.c
        return out

    @classmethod
    def from_dict(cls, data):
        form = data["form"]
        if form == "dense":
            return cls.dense(np.asarray(data["re"]) + 1j * np.asarray(data.get("im", 0.0)))
        if form == "diagonal":
            return cls.diagonal(data["values"])
        if form == "flip":
            return cls.flip_pair(data["a"], data["b"])
        if form == "flip_diag":
            return cls.flip_pair_plus_diag(data["a"], data["b"], data["c"])
        raise ShadowError(f"unsupported observable form {form!r}")


# ---------------------------------------------------------------- states

def make_rng(seed, stream=0):
    """Counter-based generator; distinct streams never overlap."""
    seq = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(seq))


def prepare_state(rho, leak_tol=1e-6):
    """Hermitian PSD check, renormalizing small truncation leakage."""
    rho = np.asarray(as_matrix(rho), dtype=np.complex128)
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-10:
        raise ShadowError("state is not Hermitian")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise ShadowError("state is not positive semidefinite")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1) > leak_tol:
        raise ShadowError(f"trace {tr:.8f} is not 1 within {leak_tol}")
    return rho / tr


def phase_state(theta, phi, dim, sign=DEFAULT_SIGN):
    n = np.arange(dim)
    return np.exp(1j * sign * (theta * n + phi * n * n)) / math.sqrt(TWO_PI)


def phase_density(rho, theta, phi, sign=DEFAULT_SIGN):
    """<theta|rho|theta>_phi for scalar phi and an array of theta."""
    rho = as_matrix(rho)
    modes = _kernels.NUMPY_KERNELS["phase_modes"](np.asarray(rho, dtype=np.complex128), np.atleast_1d(float(phi)), sign)[0]
    k = np.arange(1, modes.size + 1)
    e = np.exp(1j * sign * np.multiply.outer(np.asarray(theta, dtype=float), k))
    return (1 + 2 * np.real(e @ modes)) / TWO_PI


def phase_cdf(rho, theta, phi, sign=DEFAULT_SIGN):
    """Integral of the phase density from 0 to theta."""
    rho = as_matrix(rho)
    modes = _kernels.NUMPY_KERNELS["phase_modes"](np.asarray(rho, dtype=np.complex128), np.atleast_1d(float(phi)), sign)[0]
    k = np.arange(1, modes.size + 1)
    theta = np.asarray(theta, dtype=float)
    e = np.exp(1j * sign * np.multiply.outer(theta, k))
    return theta / TWO_PI + np.real((e - 1) @ (modes / (1j * sign * k))) / math.pi


# ---------------------------------------------------------------- sampling

def sample_shadows(rho, size, rng, n_grid=DEFAULT_GRID, sign=DEFAULT_SIGN):
    """Draw ``size`` measurement records from rho."""
    rho = prepare_state(rho)
    dim = rho.shape[0]
    if n_grid <= 2 * (dim - 1):
        raise ShadowError(f"grid of {n_grid} cannot resolve frequency {dim - 1}")
    if isinstance(rng, (int, np.integer)):
        rng = make_rng(int(rng))
    x = rng.random(size)
    is_fock = x < FOCK_PROBABILITY
    n = np.full(size, -1, dtype=np.int64)
    probs = np.clip(np.real(np.diag(rho)), 0, None)
    n_fock = int(is_fock.sum())
    n[is_fock] = rng.choice(dim, size=n_fock, p=probs / probs.sum())
    theta = np.zeros(size)
    phi = np.zeros(size)
    n_phase = size - n_fock
    phis = rng.random(n_phase) * TWO_PI
    u = rng.random(n_phase)
    if dim > 1 and n_phase:
        modes = _kernels.phase_modes(rho, phis, sign)
        thetas = _kernels.phase_cdf_invert(modes, u, n_grid, sign)
    else:
        thetas = u * TWO_PI
    phi[~is_fock] = phis
    theta[~is_fock] = thetas
    return ShadowBatch(is_fock, n, theta, phi, sign)


def sample_shadow(rho, rng_seed, n_grid=DEFAULT_GRID, sign=DEFAULT_SIGN):
    return sample_shadows(rho, 1, make_rng(rng_seed), n_grid, sign)[0]


# ---------------------------------------------------------------- estimators

def estimator_scale(convention="probability"):
    """2 alpha_1 / alpha_2 for the chosen measure normalization (both give 2pi+1)."""
    ident = design_id("phase", convention)
    return 2 * ident.alpha1 / ident.alpha2


def shadow_expectation(rec, obs, dim=None, sign=DEFAULT_SIGN):
    """Tr(rho_hat O) for a single record."""
    if obs.structured:
        c = obs.c if obs.form == "flip_diag" else -1
        if rec.branch == "fock":
            return (TWO_PI + 1) * (rec.n == c) - (c >= 0)
        arg = rec.theta * (obs.a - obs.b) + rec.phi * (obs.a ** 2 - obs.b ** 2)
        return (2 + 1 / math.pi) * math.cos(arg) + (c >= 0) / TWO_PI
    return dense_shadow_expectation(rec, obs, dim, sign)


def dense_shadow_expectation(rec, obs, dim=None, sign=DEFAULT_SIGN):
    """Generic path: (2pi+1) <chi|O|chi> - Tr O with an explicit Fourier sum."""
    dim = obs.max_index + 1 if dim is None else dim
    mat = obs.matrix(dim)
    if rec.branch == "fock":
        if rec.n >= dim:
            return -float(np.real(np.trace(mat)))
        val = (TWO_PI + 1) * mat[rec.n, rec.n] - np.trace(mat)
    else:
        chi = phase_state(rec.theta, rec.phi, dim, sign)
        val = (TWO_PI + 1) * (chi.conj() @ mat @ chi) - np.trace(mat)
    if abs(np.imag(val)) > 1e-10:
        raise ShadowError(f"imaginary residue {np.imag(val):.2e}")
    return float(np.real(val))


def shadow_values(batch, observables, dim=None):
    """(len(batch), len(observables)) matrix of single-shot estimates."""
    obs = list(observables)
    if all(o.structured for o in obs):
        a = np.array([o.a for o in obs])
        b = np.array([o.b for o in obs])
        c = np.array([o.c if o.form == "flip_diag" else -1 for o in obs])
        return _kernels.flip_pair_values(batch.is_fock, batch.n, batch.theta, batch.phi, a, b, c)
    dim = max(o.max_index for o in obs) + 1 if dim is None else dim
    dim = max(dim, int(batch.n.max(initial=0)) + 1)
    out = np.empty((len(batch), len(obs)))
    nvec = np.arange(dim)
    chis = np.exp(1j * batch.sign * (np.outer(batch.theta, nvec) + np.outer(batch.phi, nvec * nvec))) / math.sqrt(TWO_PI)
    for j, o in enumerate(obs):
        mat = o.matrix(dim)
        tr = np.real(np.trace(mat))
        phase_vals = np.real(np.einsum("si,ij,sj->s", chis.conj(), mat, chis))
        fock_vals = np.real(np.diag(mat))[np.clip(batch.n, 0, dim - 1)]
        out[:, j] = np.where(batch.is_fock, (TWO_PI + 1) * fock_vals, (TWO_PI + 1) * phase_vals) - tr
    return out


def reconstruct_state(batch, dim):
    """Average of (2pi+1)|chi><chi| - I over the records."""
    nvec = np.arange(dim)
    chis = np.exp(1j * batch.sign * (np.outer(batch.theta, nvec) + np.outer(batch.phi, nvec * nvec))) / math.sqrt(TWO_PI)
    chis[batch.is_fock] = 0
    rows = np.flatnonzero(batch.is_fock & (batch.n < dim))
    chis[rows, batch.n[rows]] = 1.0
    acc = chis.T @ chis.conj()
    return (TWO_PI + 1) * acc / len(batch) - np.eye(dim)


# ---------------------------------------------------------------- planning

@dataclass(frozen=True)
class ShadowPlan:
    N: int
    K: int
    epsilon: float
    delta: float
    c: float
    d: float

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise ShadowError("N and K must be >= 1")
        if not 0 < self.delta < 1:
            raise ShadowError("delta must lie in (0, 1)")
        if not self.c < self.d:
            raise ShadowError("need c < d")


def hoeffding_plan(M, delta, epsilon, c, d):
    """Samples per observable so that all M means are epsilon-close with prob 1 - delta."""
    if not c < d or not 0 < delta < 1 or epsilon <= 0:
        raise ShadowError("invalid plan parameters")
    n = math.ceil(math.log(2 * M / delta) * (d - c) ** 2 / (2 * epsilon ** 2))
    return ShadowPlan(n, 1, epsilon, delta, c, d)


def estimator_range(obs):
    """(min, max) of the single-shot estimate over all possible outcomes."""
    amp = 2 + 1 / math.pi
    if obs.form == "flip":
        return -amp, amp
    if obs.form == "flip_diag":
        return min(-1.0, -amp + 1 / TWO_PI), max(TWO_PI, amp + 1 / TWO_PI)
    raise ShadowError("ranges are only tabulated for structured observables")


def plan_for(observables, delta, epsilon):
    lows, highs = zip(*(estimator_range(o) for o in observables))
    return hoeffding_plan(len(observables), delta, epsilon, min(lows), max(highs))


def median_of_means(values, k=1):
    """Median over k equal groups of the group means; columns are observables."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        raise ShadowError("no samples")
    size = values.shape[0] // k
    if size == 0:
        raise ShadowError("fewer samples than groups")
    means = values[: size * k].reshape(k, size, *values.shape[1:]).mean(axis=1)
    return np.median(means, axis=0)


def median_of_means_batches(batches, obs, dim=None):
    if not batches or any(len(b) == 0 for b in batches):
        raise ShadowError("empty sample list")
    means = [shadow_values(b, [obs], dim)[:, 0].mean() for b in batches]
    return float(np.median(means))


# ---------------------------------------------------------------- variance

def third_moment_term(rho, obs):
    """E[<chi|O|chi>^2] under the outcome distribution of rho.

    Fock part plus the phase part, which reduces to a sum over index triples
    with equal sums and equal sums of squares.
    """
    rho = as_matrix(rho)
    dim = rho.shape[0]
    mat = obs.matrix(max(dim, obs.max_index + 1))
    if mat.shape[0] > dim:
        pad = np.zeros(mat.shape, dtype=np.complex128)
        pad[:dim, :dim] = rho
        rho = pad
    diag = np.real(np.diag(mat))
    fock = float(np.sum(diag ** 2 * np.real(np.diag(rho))))
    rows, cols = np.nonzero(mat)
    triple = _kernels.triple_delta_sum(rows, cols, mat[rows, cols], rho)
    return (fock + float(np.real(triple)) / TWO_PI) / (TWO_PI + 1)


def flip_pair_third_moment(rho, a, b):
    """Closed form of the third-moment term for |a><b| + |b><a|."""
    rho = as_matrix(rho)
    extra = 0.0
    if 3 * b >= a and 3 * a >= b and (3 * b - a) % 2 == 0:
        i, j = (3 * b - a) // 2, (3 * a - b) // 2
        if i < rho.shape[0] and j < rho.shape[0]:
            extra = float(np.real(rho[i, j]))
    return (1 + extra) / (math.pi * (TWO_PI + 1))


def diagonal_third_moment_rigged(rho, values):
    """1/2 <O^2> + (Tr O)^2 / (4 pi): the third-moment term under the 1/2, 1/2 measure."""
    rho = as_matrix(rho)
    values = np.asarray(values, dtype=float)
    n = len(values)
    o2 = float(np.sum(values ** 2 * np.real(np.diag(rho))[:n]))
    return 0.5 * o2 + values.sum() ** 2 / (4 * math.pi)


def analytic_variance(rho, obs):
    """Per-sample variance of Tr(rho_hat O)."""
    scale = TWO_PI + 1
    tr = obs.trace()
    mean = obs.expectation(rho)
    return scale ** 2 * third_moment_term(rho, obs) - tr ** 2 - 2 * tr * mean - mean ** 2


def empirical_variance_check(rho, obs, N, seed=0, n_grid=DEFAULT_GRID):
    """(empirical variance over N shots, analytic variance)."""
    batch = sample_shadows(rho, N, make_rng(seed), n_grid)
    vals = shadow_values(batch, [obs], as_matrix(rho).shape[0])[:, 0]
    return float(np.var(vals, ddof=1)), analytic_variance(rho, obs)


# ---------------------------------------------------------------- protocol

def worked_example_observables(m=20):
    """The first m pairs (a, b), a < b, in lexicographic order."""
    top = 2
    while top * (top - 1) // 2 < m:
        top += 1
    pairs = list(itertools.combinations(range(top), 2))[:m]
    return [Observable.flip_pair(a, b) for a, b in pairs]


def run_protocol(rho, observables, epsilon, delta, seed, k=1, n_grid=DEFAULT_GRID, stream=0):
    """Plan, sample and aggregate. Returns (plan, estimates, true values)."""
    plan = plan_for(observables, delta, epsilon)
    plan = ShadowPlan(plan.N, k, epsilon, delta, plan.c, plan.d)
    batch = sample_shadows(rho, plan.N * k, make_rng(seed, stream), n_grid)
    vals = shadow_values(batch, observables, as_matrix(rho).shape[0])
    est = median_of_means(vals, k)
    truth = np.array([o.expectation(rho) for o in observables])
    return plan, est, truth
