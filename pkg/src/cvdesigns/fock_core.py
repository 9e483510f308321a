"""Dense linear algebra on a truncated Fock space and its tensor powers."""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

#: Largest matrix side (D**t) that dense constructors will build.
MAX_SIDE = int(os.environ.get("CVDESIGNS_MAX_SIDE", "10000"))

HERMITIAN_TOL = 1e-12


class SizeOverflowError(ValueError):
    """Raised when a dense operator would exceed :data:`MAX_SIDE`."""


def check_side(dim, copies, cap=None):
    cap = MAX_SIDE if cap is None else cap
    side = dim ** copies
    if side > cap:
        raise SizeOverflowError(f"operator side {dim}^{copies} = {side} exceeds cap {cap}")
    return side


@dataclass(frozen=True)
class TruncatedSpace:
    """Fock levels 0..dim-1."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True, eq=False)
class ComplexOperator:
    """A dense operator on ``copies`` tensor factors of a truncated space."""

    space: TruncatedSpace
    copies: int
    matrix: np.ndarray = field(repr=False)
    hermitian: bool = False

    def __post_init__(self):
        mat = np.asarray(self.matrix)
        if not np.iscomplexobj(mat):
            mat = mat.astype(np.complex128)
        side = self.space.dim ** self.copies
        if mat.shape != (side, side):
            raise ValueError(f"expected a {side}x{side} matrix, got {mat.shape}")
        if self.hermitian:
            err = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
            if err > HERMITIAN_TOL:
                raise ValueError(f"matrix flagged Hermitian but deviates by {err:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix, copies=1, hermitian=False):
        matrix = np.asarray(matrix)
        dim = round(matrix.shape[0] ** (1.0 / copies))
        return cls(TruncatedSpace(dim), copies, matrix, hermitian)

    @property
    def dim(self):
        return self.space.dim

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def trace(self):
        return complex(np.trace(self.matrix))

    def dag(self):
        return ComplexOperator(self.space, self.copies, self.matrix.conj().T, self.hermitian)


@dataclass(frozen=True)
class KrausChannel:
    """A channel rho -> sum_K K rho K^dag on a single truncated mode."""

    operators: tuple

    def __post_init__(self):
        ops = tuple(self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        spaces = {op.space for op in ops}
        if len(spaces) != 1 or any(op.copies != 1 for op in ops):
            raise ValueError("Kraus operators must share one single-copy space")
        object.__setattr__(self, "operators", ops)

    @property
    def space(self):
        return self.operators[0].space

    def stacked(self):
        """Kraus operators as a (num_ops, D, D) array."""
        return np.stack([op.matrix for op in self.operators])

    def completeness_defect(self, levels=None):
        """max |sum K^dag K - I| restricted to the first ``levels`` Fock states."""
        ks = self.stacked()
        total = np.einsum("kji,kjl->il", ks.conj(), ks)
        n = self.space.dim if levels is None else levels
        return float(np.max(np.abs(total[:n, :n] - np.eye(n)))) if n > 0 else 0.0


def as_matrix(op):
    return op.matrix if isinstance(op, ComplexOperator) else np.asarray(op)


def fock_state(dim, n):
    vec = np.zeros(dim, dtype=np.complex128)
    vec[n] = 1.0
    return vec


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(np.complex128)


def number(dim):
    return np.diag(np.arange(dim, dtype=float)).astype(np.complex128)


def coherent_state(dim, alpha):
    """Truncated coherent state, renormalized after truncation."""
    n = np.arange(dim)
    log_mag = -0.5 * abs(alpha) ** 2 - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        amps = np.zeros(dim, dtype=np.complex128)
        amps[0] = 1.0
        return amps
    amps = np.exp(log_mag + n * np.log(abs(alpha))) * np.exp(1j * n * np.angle(alpha))
    return amps / np.linalg.norm(amps)


def permutation_operator(sigma, space):
    """W_sigma |n_1 ... n_t> = |n_{sigma^-1(1)} ... n_{sigma^-1(t)}>.

    ``sigma`` is given 0-based as the tuple of images (sigma(0), ..., sigma(t-1)),
    so tensor factor j is carried to position sigma(j).
    """
    sigma = tuple(int(s) for s in sigma)
    t = len(sigma)
    if t < 1 or sorted(sigma) != list(range(t)):
        raise ValueError(f"not a permutation: {sigma}")
    dim = space.dim
    side = check_side(dim, t)
    inv = np.argsort(sigma)
    idx = np.arange(side).reshape((dim,) * t)
    source = np.transpose(idx, axes=inv).reshape(-1)
    mat = np.zeros((side, side), dtype=np.complex128)
    mat[np.arange(side), source] = 1.0
    return ComplexOperator(space, t, mat, hermitian=False)


def symmetric_projector(space, t):
    """(1/t!) sum over S_t of W_sigma."""
    if t < 1:
        raise ValueError("t must be >= 1")
    dim = space.dim
    side = check_side(dim, t)
    idx = np.arange(side).reshape((dim,) * t)
    mat = np.zeros((side, side))
    rows = np.arange(side)
    for perm in itertools.permutations(range(t)):
        source = np.transpose(idx, axes=np.argsort(perm)).reshape(-1)
        mat[rows, source] += 1.0
    mat /= math.factorial(t)
    return ComplexOperator(space, t, mat, hermitian=True)


def symmetric_projector_element(a, b):
    """<a| Pi_t |b> for Fock index tuples a, b of equal length."""
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        raise ValueError("index tuples must have equal length")
    if sorted(a) != sorted(b):
        return 0.0
    mult = 1
    for count in Counter(a).values():
        mult *= math.factorial(count)
    return mult / math.factorial(len(a))


def lambda_element(a, space=None):
    """Diagonal element Lambda_t(a) = <a| Pi_t |a>."""
    a = tuple(int(x) for x in a)
    if space is not None and any(x < 0 or x >= space.dim for x in a):
        raise IndexError(f"Fock index out of range for dimension {space.dim}: {a}")
    if any(x < 0 for x in a):
        raise IndexError("Fock indices must be nonnegative")
    return symmetric_projector_element(a, a)


def symmetric_trace(dim, t):
    """Tr Pi_t on dim levels: the number of size-t multisets."""
    return math.comb(dim + t - 1, t)


def partial_trace(op, keep):
    """Trace out every tensor factor not listed in ``keep`` (0-based)."""
    op = op if isinstance(op, ComplexOperator) else ComplexOperator.from_matrix(op)
    t = op.copies
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= t:
        raise ValueError(f"invalid subset {keep} of {t} copies")
    dim = op.dim
    tensor = op.matrix.reshape((dim,) * (2 * t))
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:t])
    cols = list(letters[t:2 * t])
    for j in range(t):
        if j not in keep:
            cols[j] = rows[j]
    out = "".join(rows[j] for j in keep) + "".join(cols[j] for j in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor)
    side = dim ** len(keep)
    return ComplexOperator(op.space, len(keep), reduced.reshape(side, side))


def apply_channel(channel, rho):
    rho_m = as_matrix(rho)
    if rho_m.shape != (channel.space.dim,) * 2:
        raise ValueError("state and channel dimensions differ")
    ks = channel.stacked()
    out = np.einsum("kij,jl,kml->im", ks, rho_m, ks.conj())
    out = 0.5 * (out + out.conj().T)
    return ComplexOperator(channel.space, 1, out, hermitian=True)


def diagonal_pseudo_inverse(R, zero_tol=1e-14):
    """Entrywise reciprocal of a nonnegative diagonal on its support."""
    mat = as_matrix(R)
    diag = np.real(np.diag(mat))
    inv = np.zeros_like(diag)
    support = diag > zero_tol
    inv[support] = 1.0 / diag[support]
    space = R.space if isinstance(R, ComplexOperator) else TruncatedSpace(len(diag))
    return ComplexOperator(space, 1, np.diag(inv), hermitian=True)


def kron_power(mat, t):
    out = np.ones((1, 1), dtype=np.result_type(mat, np.complex128))
    for _ in range(t):
        out = np.kron(out, mat)
    return out
