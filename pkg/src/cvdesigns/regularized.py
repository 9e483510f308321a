"""Regularizers, regularized symmetric projectors and ensembles that match them.

A regularizer is a nonnegative diagonal R on the truncation. The regularized
projector is R^{(x)t} Pi_t R^{(x)t}, and an ensemble of normalized states is an
R-regularized t-design when its t-th moment equals that projector divided by
its trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock_core import (
    ComplexOperator,
    TruncatedSpace,
    check_side,
    partial_trace,
    symmetric_projector,
)

KINDS = ("soft", "hard", "custom")


class SupportError(ValueError):
    """An ensemble state leaves the support of a singular regularizer."""


class SignedEnsembleError(ValueError):
    """Sampling was requested from an ensemble with negative weights."""


# ---------------------------------------------------------------- regularizers

@dataclass(frozen=True, eq=False)
class Regularizer:
    kind: str
    space: TruncatedSpace
    beta: float | None = None
    cutoff: int | None = None
    diagonal: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        dim = self.space.dim
        if self.kind == "soft":
            if not self.beta or self.beta <= 0:
                raise ValueError("beta must be > 0")
            diag = np.exp(-self.beta * np.arange(dim))
        elif self.kind == "hard":
            if self.cutoff is None or not 1 <= self.cutoff <= dim:
                raise ValueError(f"cutoff must lie in [1, {dim}]")
            diag = (np.arange(dim) < self.cutoff).astype(float)
        else:
            diag = np.asarray(self.diagonal, dtype=float).reshape(-1)
            if diag.size != dim:
                raise ValueError("diagonal length must match the space")
            if np.any(diag < 0):
                raise ValueError("regularizer entries must be nonnegative")
        diag = diag.copy()
        diag.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)

    @classmethod
    def soft(cls, beta, dim):
        return cls("soft", TruncatedSpace(dim), beta=float(beta))

    @classmethod
    def hard(cls, cutoff, dim):
        return cls("hard", TruncatedSpace(dim), cutoff=int(cutoff))

    @classmethod
    def custom(cls, diagonal):
        diagonal = np.asarray(diagonal, dtype=float)
        return cls("custom", TruncatedSpace(diagonal.size), diagonal=diagonal)

    @property
    def dim(self):
        return self.space.dim

    @property
    def operator(self):
        return ComplexOperator(self.space, 1, np.diag(self.diagonal), hermitian=True)

    @property
    def support(self):
        """Boolean mask of the levels where R is nonzero (all of them for soft R)."""
        if self.kind == "soft":
            return np.ones(self.dim, dtype=bool)
        return self.diagonal > 1e-14

    @property
    def pinv_diagonal(self):
        out = np.zeros_like(self.diagonal)
        nz = self.support
        out[nz] = 1.0 / self.diagonal[nz]
        return out

    @property
    def is_invertible(self):
        return bool(np.all(self.support))

    def power_trace(self, k):
        """Tr R^k."""
        return float(np.sum(self.diagonal ** k))

    def to_dict(self):
        if self.kind == "soft":
            return {"kind": "soft", "beta": self.beta, "dim": self.dim}
        if self.kind == "hard":
            return {"kind": "hard", "d": self.cutoff, "dim": self.dim}
        return {"kind": "custom", "diagonal": self.diagonal.tolist()}

    @classmethod
    def from_dict(cls, data):
        kind = data["kind"]
        if kind == "soft":
            return cls.soft(data["beta"], data["dim"])
        if kind == "hard":
            return cls.hard(data["d"], data["dim"])
        return cls.custom(data["diagonal"])


def regularized_trace(R, t):
    """Tr Pi_t^(R): complete homogeneous symmetric polynomial of the entries r_n^2.

    Evaluated with Newton's identities on the power sums Tr R^{2k}.
    """
    diag = R.diagonal if isinstance(R, Regularizer) else np.asarray(R, dtype=float)
    power = [float(np.sum(diag ** (2 * k))) for k in range(1, t + 1)]
    h = [1.0]
    for n in range(1, t + 1):
        h.append(sum(power[k - 1] * h[n - k] for k in range(1, n + 1)) / n)
    return h[t]


def soft_trace_closed_form(beta, t):
    """Tr Pi_t^(R_beta) on the untruncated space: prod_k 1/(1 - e^{-2 k beta})."""
    out = 1.0
    for k in range(1, t + 1):
        out /= 1.0 - math.exp(-2 * k * beta)
    return out


def regularized_projector(R, t):
    """R^{(x)t} Pi_t R^{(x)t} as a dense operator."""
    check_side(R.dim, t)
    rt = np.ones(1)
    for _ in range(t):
        rt = np.kron(rt, R.diagonal)
    proj = symmetric_projector(R.space, t).matrix
    return ComplexOperator(R.space, t, rt[:, None] * proj * rt[None, :], hermitian=True)


def frame_potential_bound(R, t):
    return 1.0 / regularized_trace(R, t)


# ---------------------------------------------------------------- ensembles

class RegularizedEnsemble:
    """Finite ensemble of normalized states with (possibly signed) weights."""

    def __init__(self, states, weights, regularizer=None, signed=False):
        states = np.array(states, dtype=np.complex128, ndmin=2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if states.shape[0] != weights.shape[0]:
            raise ValueError("one weight per state is required")
        if not signed and np.any(weights < 0):
            raise ValueError("negative weights need signed=True")
        self.states = states
        self.weights = weights
        self.regularizer = regularizer
        self.signed = bool(signed)

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def with_weights(self, weights):
        return RegularizedEnsemble(self.states, weights, self.regularizer, self.signed)

    def sample(self, rng, size=None):
        if self.signed:
            raise SignedEnsembleError("signed ensembles cannot be sampled")
        idx = rng.choice(len(self.weights), size=size, p=self.weights / self.weights.sum())
        return self.states[idx]

    def moment(self, t):
        check_side(self.dim, t)
        vecs = self.states
        for _ in range(t - 1):
            vecs = np.einsum("ki,kj->kij", vecs, self.states).reshape(len(self.weights), -1)
        return (vecs.T * self.weights) @ vecs.conj()

    def first_moment(self):
        return self.moment(1)

    def moment_tensor(self):
        """M[a,b,c,d] = E psi_a psi_b conj(psi_c) conj(psi_d)."""
        d = self.dim
        return self.moment(2).reshape(d, d, d, d)

    def frame_potential(self, R, t):
        rinv = _pinv_for(R, self.states)
        gram = (self.states.conj() * rinv) @ self.states.T
        return float(self.weights @ (np.abs(gram) ** (2 * t)) @ self.weights)

    def to_dict(self):
        return {
            "kind": "state",
            "dim": self.dim,
            "states": [[[float(z.real), float(z.imag)] for z in row] for row in self.states],
            "weights": self.weights.tolist(),
            "regularizer": None if self.regularizer is None else self.regularizer.to_dict(),
            "signed": self.signed,
        }


def _pinv_for(R, states):
    if R is None:
        return np.ones(states.shape[1])
    reg = R if isinstance(R, Regularizer) else Regularizer.custom(np.real(np.diag(np.asarray(R))))
    if not reg.is_invertible:
        outside = ~reg.support
        leak = np.max(np.abs(states[:, outside]), initial=0.0)
        if leak > 1e-12:
            raise SupportError(f"state amplitude {leak:.2e} outside the regularizer support")
    return reg.pinv_diagonal


class KerredDesign:
    """Soft-regularized Kerred phase design on a finite periodic grid.

    Fock states |n> carry weight 4 sinh^2(b) cosh(b) e^{-b(4n+3)}. Each grid
    point (theta, phi) carries the state s sum_n e^{-bn} e^{i(theta n + phi n^2)}|n>,
    with s^2 = 1 - e^{-2b} and total continuum weight cosh(b)/e^b.
    The default grid resolves every frequency that appears in second moments.
    """

    signed = False

    def __init__(self, beta, dim, n_theta=None, n_phi=None, fock_weights=None, continuum_weight=None):
        if beta <= 0:
            raise ValueError("beta must be > 0")
        self.beta = float(beta)
        self.dim = int(dim)
        self.n_theta = 2 * (dim - 1) + 1 if n_theta is None else int(n_theta)
        self.n_phi = 2 * (dim - 1) ** 2 + 1 if n_phi is None else int(n_phi)
        self.regularizer = Regularizer.soft(beta, dim)
        b = self.beta
        n = np.arange(self.dim)
        if fock_weights is None:
            fock_weights = 4 * math.sinh(b) ** 2 * math.cosh(b) * np.exp(-b * (4 * n + 3))
        if continuum_weight is None:
            continuum_weight = math.cosh(b) / math.exp(b)
        self.fock_weights = np.asarray(fock_weights, dtype=float)
        self.continuum_weight = float(continuum_weight)
        self.scale = math.sqrt(-math.expm1(-2 * b))
        self.theta = 2 * math.pi * np.arange(self.n_theta) / self.n_theta
        self.phi = 2 * math.pi * np.arange(self.n_phi) / self.n_phi
        self._s_theta = None
        self._s_phi = None

    @property
    def density(self):
        """Continuum weight per unit (theta, phi) area."""
        return self.continuum_weight / (2 * math.pi) ** 2

    @property
    def total_weight(self):
        return float(self.fock_weights.sum() + self.continuum_weight)

    @property
    def envelope(self):
        return self.scale * np.exp(-self.beta * np.arange(self.dim))

    def with_weights(self, fock_weights=None, continuum_weight=None):
        return KerredDesign(
            self.beta, self.dim, self.n_theta, self.n_phi,
            self.fock_weights if fock_weights is None else fock_weights,
            self.continuum_weight if continuum_weight is None else continuum_weight,
        )

    def grid_states(self, theta, phi):
        n = np.arange(self.dim)
        phase = np.exp(1j * (np.multiply.outer(theta, n) + np.multiply.outer(phi, n * n)))
        return self.envelope * phase

    def to_finite(self):
        """Materialize every state; only sensible for small truncations."""
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        grid = self.grid_states(th.reshape(-1), ph.reshape(-1))
        states = np.vstack([np.eye(self.dim, dtype=np.complex128), grid])
        weights = np.concatenate([self.fock_weights, np.full(grid.shape[0], self.continuum_weight / grid.shape[0])])
        return RegularizedEnsemble(states, weights, self.regularizer)

    def sample(self, rng, size=None):
        return self.to_finite().sample(rng, size)

    # Grid averages of e^{i theta k} and e^{i phi q}: the inverse DFT of the
    # uniform grid weights, read at q mod N.
    def s_theta(self, k):
        if self._s_theta is None:
            self._s_theta = np.fft.ifft(np.ones(self.n_theta))
        return self._s_theta[np.asarray(k) % self.n_theta]

    def s_phi(self, q):
        if self._s_phi is None:
            self._s_phi = np.fft.ifft(np.ones(self.n_phi))
        return self._s_phi[np.asarray(q) % self.n_phi]

    def first_moment(self):
        n = np.arange(self.dim)
        env = self.envelope
        grid = self.continuum_weight * np.outer(env, env) * self.s_theta(n[:, None] - n[None, :]) * self.s_phi(
            (n * n)[:, None] - (n * n)[None, :]
        )
        return np.diag(self.fock_weights) + grid

    def moment_block(self, a):
        """M[a, b, c, d] for the Fock indices a in ``a`` (all b, c, d)."""
        a = np.asarray(a).reshape(-1, 1, 1, 1)
        n = np.arange(self.dim)
        b, c, d = n[None, :, None, None], n[None, None, :, None], n[None, None, None, :]
        env = self.envelope
        grid = (
            self.continuum_weight
            * env[a] * env[b] * env[c] * env[d]
            * self.s_theta(a + b - c - d)
            * self.s_phi(a * a + b * b - c * c - d * d)
        )
        fock = np.where((a == b) & (a == c) & (a == d), self.fock_weights[a], 0.0)
        return grid + fock

    def moment_tensor(self):
        return self.moment_block(np.arange(self.dim))

    def iter_blocks(self, size=8):
        for lo in range(0, self.dim, size):
            idx = np.arange(lo, min(lo + size, self.dim))
            yield idx, self.moment_block(idx)

    def frame_potential(self, R, t):
        """Exact double average of |<psi|R^+|phi>|^{2t} over the design.

        Grid differences are again grid points, so the grid-grid term is a
        single average of |g(dtheta, dphi)|^{2t}.
        """
        reg = R if isinstance(R, Regularizer) else self.regularizer
        rinv = reg.pinv_diagonal
        env = self.envelope
        w = self.fock_weights
        wc = self.continuum_weight
        fock_fock = float(np.sum(w ** 2 * rinv ** (2 * t)))
        cross = 2 * wc * float(np.sum(w * (rinv * env) ** (2 * t)))
        n = np.arange(self.dim)
        profile = env * rinv * env
        tw = np.exp(1j * np.outer(n, self.theta))
        total = 0.0
        step = max(1, 2_000_000 // (self.dim * self.n_theta))
        for lo in range(0, self.n_phi, step):
            pw = np.exp(1j * np.outer(self.phi[lo:lo + step], n * n)) * profile
            total += float(np.sum(np.abs(pw @ tw) ** (2 * t)))
        grid = wc * wc * total / (self.n_theta * self.n_phi)
        return fock_fock + cross + grid

    def to_dict(self):
        return {
            "kind": "kerred",
            "beta": self.beta,
            "dim": self.dim,
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
            "fock_weights": self.fock_weights.tolist(),
            "continuum_weight": self.continuum_weight,
            "regularizer": self.regularizer.to_dict(),
            "signed": False,
        }


def regularized_kerred_design(beta, dim, n_theta=None, n_phi=None):
    return KerredDesign(beta, dim, n_theta, n_phi)


def kerred_state_energy(beta, dim=None):
    """Mean photon number of a normalized soft-regularized Kerred state.

    Untruncated value coth(beta)/2 - 1/2; with ``dim`` the truncated sum.
    """
    if dim is None:
        return 0.5 / math.tanh(beta) - 0.5
    n = np.arange(dim)
    p = np.exp(-2 * beta * n)
    return float(np.sum(n * p) / np.sum(p))


def frame_potential(ens, R, t):
    return ens.frame_potential(R, t)


def design_error(ens, t=2):
    """Largest element error between the ensemble moment and Pi_t^(R)/Tr Pi_t^(R)."""
    reg = ens.regularizer
    if t == 1:
        target = np.diag(reg.diagonal ** 2) / regularized_trace(reg, 1)
        return float(np.max(np.abs(ens.first_moment() - target)))
    if t != 2:
        raise ValueError("t must be 1 or 2")
    trace2 = regularized_trace(reg, 2)
    r = reg.diagonal
    worst = 0.0
    if isinstance(ens, KerredDesign):
        blocks = ens.iter_blocks()
    else:
        blocks = [(np.arange(ens.dim), ens.moment_tensor())]
    for idx, block in blocks:
        n = np.arange(ens.dim)
        a = idx.reshape(-1, 1, 1, 1)
        b, c, d = n[None, :, None, None], n[None, None, :, None], n[None, None, None, :]
        pi2 = 0.5 * (((a == c) & (b == d)).astype(float) + ((a == d) & (b == c)))
        target = r[a] * r[b] * r[c] * r[d] * pi2 / trace2
        worst = max(worst, float(np.max(np.abs(block - target))))
    return worst


def reduced_moment_deviation(ens, R=None):
    """(empirical first moment, prediction from the 2-design property).

    prediction = R^2 ((Tr R^2) I + R^2) / (2 Tr Pi_2^(R)).
    """
    reg = ens.regularizer if R is None else R
    r2 = reg.diagonal ** 2
    predicted = np.diag(r2 * (r2.sum() + r2)) / (2 * regularized_trace(reg, 2))
    return ens.first_moment(), predicted


def first_moment_deviation(R):
    """Largest gap between the 2-design-implied first moment and R^2/Tr R^2."""
    r2 = R.diagonal ** 2
    predicted = r2 * (r2.sum() + r2) / (2 * regularized_trace(R, 2))
    return float(np.max(np.abs(predicted - r2 / r2.sum())))


def reduced_third_moment_check(R):
    """(Tr_3 Pi_3^(R) / Tr Pi_3^(R), predicted) as dense matrices.

    predicted = Pi_2^(R) ((Tr R^2) I(x)I + I(x)R^2 + R^2(x)I) / (3 Tr Pi_3^(R)).
    """
    p3 = regularized_projector(R, 3)
    reduced = partial_trace(p3, [0, 1]).matrix / regularized_trace(R, 3)
    r2 = R.diagonal ** 2
    eye = np.ones(R.dim)
    mix = r2.sum() + np.kron(eye, r2) + np.kron(r2, eye)
    predicted = regularized_projector(R, 2).matrix * mix[None, :] / (3 * regularized_trace(R, 3))
    return reduced, predicted


def polynomial_regularizer_moments(dims, power=2, k=3):
    """Partial sums for the (1+n)^{-power} regularized phase state.

    Returns (norms, moments) where moments[i] = sum_{n<dims[i]} n^k (1+n)^{-2 power}.
    With power 2 the norm converges while the k >= 3 moments grow without bound.
    """
    norms = []
    moments = []
    for dim in dims:
        n = np.arange(dim, dtype=float)
        amp2 = (1 + n) ** (-2.0 * power)
        norms.append(float(amp2.sum()))
        moments.append(float(np.sum(n ** k * amp2)))
    return np.array(norms), np.array(moments)


# ---------------------------------------------------------------- displaced Fock

def displaced_fock_coefficients(ell):
    """c_n = (2l-2n)!(2n)! / (4^l [n!(l-n)!]^2) for n = 0..l."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    if ell > 40:
        raise ValueError("ell > 40 is outside the guarded range")
    n = np.arange(ell + 1)
    lg = np.vectorize(math.lgamma)
    log_c = lg(2 * ell - 2 * n + 1) + lg(2 * n + 1) - ell * math.log(4) - 2 * (lg(n + 1) + lg(ell - n + 1))
    return np.exp(log_c)


def displaced_fock_weights(ell_max, reading="index"):
    """Weights b_l with sum_{l>=n} b_l c_n^(l) = 1 for every n <= ell_max.

    ``reading="index"`` solves the triangular system by back substitution.
    ``reading="top"`` uses c_l^(ell_max) in the correction sum instead of
    c_l^(p); it is kept only to show that it does not satisfy the identity.
    """
    coeffs = [displaced_fock_coefficients(p) for p in range(ell_max + 1)]
    b = np.zeros(ell_max + 1)
    for ell in range(ell_max, -1, -1):
        if reading == "index":
            corr = sum(b[p] * coeffs[p][ell] for p in range(ell + 1, ell_max + 1))
        elif reading == "top":
            corr = sum(b[p] * coeffs[ell_max][ell] for p in range(ell + 1, ell_max + 1))
        else:
            raise ValueError(f"unknown reading {reading!r}")
        b[ell] = (1 - corr) / coeffs[ell][ell]
    return b


def substitution_residual(b):
    """max_n |sum_l b_l c_n^(l) - 1| for n <= len(b)-1."""
    ell_max = len(b) - 1
    coeffs = [displaced_fock_coefficients(p) for p in range(ell_max + 1)]
    sums = [sum(b[p] * coeffs[p][n] for p in range(n, ell_max + 1)) for n in range(ell_max + 1)]
    return float(np.max(np.abs(np.array(sums) - 1)))


def beam_splitter(dim, angle=math.pi / 4):
    """exp[angle (a^dag b - a b^dag)] on dim^2 levels, index n1 * dim + n2.

    The generator conserves n1 + n2, so each photon-number sector is
    diagonalized on its own (dense Hermitian eigendecomposition). The result
    equals the exponential of the full truncated generator, and is exact on
    every sector whose total photon number is below dim.
    """
    out = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for total in range(2 * dim - 1):
        n1 = np.arange(max(0, total - dim + 1), min(total, dim - 1) + 1)
        n2 = total - n1
        # <n1+1, n2-1| a^dag b |n1, n2> = sqrt((n1+1) n2)
        hop = np.sqrt((n1[:-1] + 1.0) * n2[:-1])
        raise_ = np.zeros((n1.size, n1.size))
        raise_[np.arange(1, n1.size), np.arange(n1.size - 1)] = hop
        gen = 1j * (raise_ - raise_.T)
        vals, vecs = np.linalg.eigh(gen)
        block = (vecs * np.exp(-1j * angle * vals)) @ vecs.conj().T
        idx = n1 * dim + n2
        out[np.ix_(idx, idx)] = block
    return out


def beam_splitter_dense(dim, angle=math.pi / 4):
    """Same unitary from one eigendecomposition of the full dim^2 generator."""
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    eye = np.eye(dim)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    gen = 1j * (a1.T @ a2 - a1 @ a2.T)
    vals, vecs = np.linalg.eigh(gen)
    return (vecs * np.exp(-1j * angle * vals)) @ vecs.conj().T


def beam_splitter_reduced(ell, dim, unitary=None):
    """Tr_1 U |l,l><l,l| U^dag as a dim x dim matrix."""
    if 2 * ell >= dim:
        raise ValueError(f"dim={dim} cannot hold the {2 * ell}-photon sector")
    u = beam_splitter(dim) if unitary is None else unitary
    psi = u[:, ell * dim + ell].reshape(dim, dim)
    return psi.T @ psi.conj()


def verify_displaced_fock_design(ell_max, dim):
    """Largest element error of sum_l b_l Tr_1(U|ll><ll|U^dag) against sum_{n<=ell_max} |2n><2n|.

    Compared on Fock indices up to 2 ell_max.
    """
    if dim < 4 * ell_max or dim <= 2 * ell_max:
        raise ValueError("truncation too small")
    u = beam_splitter(dim)
    b = displaced_fock_weights(ell_max)
    total = sum(b[ell] * beam_splitter_reduced(ell, dim, u) for ell in range(ell_max + 1))
    target = np.zeros((dim, dim))
    for n in range(ell_max + 1):
        target[2 * n, 2 * n] = 1.0
    top = 2 * ell_max + 1
    return float(np.max(np.abs(total[:top, :top] - target[:top, :top])))


def displaced_fock_ensemble(ell_max, dim):
    """Two-mode states U|l,l> with the signed weights b_l."""
    u = beam_splitter(dim)
    states = np.array([u[:, ell * dim + ell] for ell in range(ell_max + 1)])
    return RegularizedEnsemble(states, displaced_fock_weights(ell_max), signed=True)

