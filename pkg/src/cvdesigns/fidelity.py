"""Pure-loss channel fidelities with soft and hard energy regularizers.

Every closed form has a numeric twin: Kraus sums on the truncation, the
defining design expectation, or a Monte-Carlo coherent-state average.

Parameter bookkeeping for the loss curves: ``beta = log(1 + 1/n_bar)`` makes
the soft effective dimension 2 n_bar + 1, and ``d = floor(n_bar) + 1`` is the
hard cutoff. The second average fidelity is reported for the regularizer
R_{beta/2}, whose relation to the entanglement fidelity goes through R_beta.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from . import _kernels
from .cp_designs import CPDesign, construction1_mub_design
from .fock_core import ComplexOperator, KrausChannel, TruncatedSpace, coherent_state
from .regularized import (
    KerredDesign,
    Regularizer,
    RegularizedEnsemble,
    SupportError,
)

DEFAULT_DIM = 200
SOFT_TAIL_TOL = 1e-12


class ZeroRegularizerError(ValueError):
    """The regularizer has zero trace."""


# ---------------------------------------------------------------- channels

@dataclass(frozen=True, eq=False)
class LossChannel:
    """Pure loss with transmissivity ``kappa`` on ``dim`` levels.

    Kraus operators K_i = sum_m sqrt(C(m+i, i)) (1-kappa^2)^{i/2} kappa^m |m><m+i|
    for i = 0..i_max. They are stored as a band: ``band[m, i] = <m|K_i|m+i>``.
    """

    kappa: float
    dim: int
    i_max: int | None = None
    band: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa={self.kappa} outside [0, 1]")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        i_max = self.dim - 1 if self.i_max is None else int(self.i_max)
        if not 0 <= i_max <= self.dim:
            raise ValueError(f"i_max must lie in [0, {self.dim}]")
        object.__setattr__(self, "i_max", i_max)
        band = loss_band(self.kappa, self.dim)
        band[:, i_max + 1:] = 0.0
        band.setflags(write=False)
        object.__setattr__(self, "band", band)

    @property
    def space(self):
        return TruncatedSpace(self.dim)

    def kraus(self):
        """Dense Kraus list as a :class:`KrausChannel`."""
        ops = []
        m = np.arange(self.dim)
        for i in range(min(self.i_max, self.dim - 1) + 1):
            mat = np.zeros((self.dim, self.dim), dtype=np.complex128)
            mat[m[: self.dim - i], m[: self.dim - i] + i] = self.band[: self.dim - i, i]
            ops.append(ComplexOperator(self.space, 1, mat))
        return KrausChannel(tuple(ops))

    def completeness_defect(self):
        """max |sum K^dag K - I| over the levels n <= i_max, where the list is complete."""
        levels = min(self.dim, self.i_max + 1)
        n = np.arange(levels)
        col = np.zeros(levels)
        for i in range(min(self.i_max, self.dim - 1) + 1):
            ok = n >= i
            col[ok] += self.band[n[ok] - i, i] ** 2
        return float(np.max(np.abs(col - 1.0))) if levels else 0.0


def loss_band(kappa, dim):
    """``band[m, i] = sqrt(C(m+i, i)) (1-kappa^2)^{i/2} kappa^m`` with zeros past the truncation."""
    m = np.arange(dim)[:, None].astype(float)
    i = np.arange(dim)[None, :].astype(float)
    log_binom = gammaln(m + i + 1) - gammaln(i + 1) - gammaln(m + 1)
    with np.errstate(divide="ignore"):
        logs = 0.5 * log_binom + xlogy(0.5 * i, 1.0 - kappa * kappa) + xlogy(m, kappa)
    band = np.exp(logs)
    band[(m + i) >= dim] = 0.0
    return band


def loss_kraus(kappa, D, i_max=None):
    return LossChannel(kappa, D, i_max).kraus()


def _dense_stack(ch):
    if isinstance(ch, LossChannel):
        return ch.kraus().stacked()
    return ch.stacked()


def _dim_of(ch):
    return ch.dim if isinstance(ch, LossChannel) else ch.space.dim


def _diag(R, dim=None):
    if isinstance(R, Regularizer):
        diag = R.diagonal
    elif isinstance(R, ComplexOperator):
        diag = np.real(np.diag(R.matrix))
    else:
        arr = np.asarray(R)
        diag = np.real(np.diag(arr)) if arr.ndim == 2 else arr.astype(float)
    if dim is not None and diag.size != dim:
        raise ValueError(f"regularizer has {diag.size} levels, channel has {dim}")
    return np.asarray(diag, dtype=float)


# ---------------------------------------------------------------- states

def soft_regularizer(beta, dim):
    return Regularizer.soft(beta, dim)


def hard_regularizer(d, dim):
    return Regularizer.hard(d, dim)


def thermal_state(R):
    """rho_R = R / Tr R."""
    diag = _diag(R)
    total = diag.sum()
    if total <= 0:
        raise ZeroRegularizerError("Tr R must be positive")
    return ComplexOperator(TruncatedSpace(diag.size), 1, np.diag(diag / total), hermitian=True)


def tmsv_state(R, D=None):
    """(Tr R)^{-1/2} (R^{1/4} (x) R^{1/4}) sum_n |n n>, renormalized on the truncation.

    Returned as a length D^2 vector in the |a> (x) |b> ordering.
    """
    diag = _diag(R)
    if D is not None:
        diag = diag[:D]
    total = diag.sum()
    if total <= 0:
        raise ZeroRegularizerError("Tr R must be positive")
    dim = diag.size
    psi = np.zeros((dim, dim), dtype=np.complex128)
    psi[np.arange(dim), np.arange(dim)] = np.sqrt(diag / total)
    return psi.reshape(-1)


def tmsv_squeezing(beta):
    """Squeezing r of the soft-regularized pair: tanh r = e^{-beta/2}."""
    x = math.exp(-beta / 2)
    return math.log((1 + x) / math.sqrt(-math.expm1(-beta)))


def soft_truncation(beta, tol=SOFT_TAIL_TOL):
    """Smallest D with sum_{n>=D} e^{-beta n} < tol * Tr R_beta, i.e. e^{-beta D} < tol."""
    return int(math.ceil(-math.log(tol) / beta))


def soft_tail(beta, dim):
    """Relative thermal mass beyond the truncation: e^{-beta dim}."""
    return math.exp(-beta * dim)


def beta_for(n_bar):
    """Inverse temperature whose thermal state has mean occupation ``n_bar``."""
    if n_bar <= 0:
        raise ValueError("n_bar must be > 0")
    return math.log1p(1.0 / n_bar)


def hard_cutoff_for(n_bar):
    return int(math.floor(n_bar)) + 1


def effective_dimension(R):
    """(Tr R)^2 / Tr R^2, the inverse purity of rho_R."""
    diag = _diag(R)
    t1 = diag.sum()
    if t1 <= 0:
        raise ZeroRegularizerError("Tr R must be positive")
    return float(t1 * t1 / np.sum(diag * diag))


def thermal_effective_dimension(R):
    """2 <n>_{rho_R} + 1; equals the effective dimension for R_beta up to truncation."""
    rho = np.real(np.diag(thermal_state(R).matrix))
    return float(2 * np.dot(np.arange(rho.size), rho) + 1)


# ---------------------------------------------------------------- Kraus sums

def entanglement_fidelity(ch, R, method="kraus"):
    """F_e^(R) = <phi_R| (I (x) D)(phi_R) |phi_R>.

    ``method="kraus"`` sums |Tr(rho_R K)|^2. ``method="two_mode"`` builds the
    purification and applies each Kraus operator to its second arm.
    """
    dim = _dim_of(ch)
    diag = _diag(R, dim)
    if method == "kraus":
        rho = diag / diag.sum()
        if isinstance(ch, LossChannel):
            # only K_0 has a diagonal
            return float(np.dot(rho, ch.band[:, 0]) ** 2)
        ks = _dense_stack(ch)
        traces = np.einsum("m,kmm->k", rho, ks)
        return float(np.sum(np.abs(traces) ** 2))
    if method == "two_mode":
        phi = tmsv_state(diag).reshape(dim, dim)
        total = 0.0
        for k in _dense_stack(ch):
            total += abs(np.vdot(phi, phi @ k.T)) ** 2
        return float(total)
    raise ValueError(f"unknown method {method!r}")


def channel_overlap(ch, sigma, tau):
    """Tr[D(sigma) tau] for diagonal sigma and tau given as vectors."""
    dim = _dim_of(ch)
    sigma = _diag(sigma, dim)
    tau = _diag(tau, dim)
    if isinstance(ch, LossChannel):
        total = 0.0
        for i in range(dim):
            m = dim - i
            total += float(np.sum(tau[:m] * sigma[i:] * ch.band[:m, i] ** 2))
        return total
    ks = _dense_stack(ch)
    return float(np.einsum("a,kab,b->", tau, np.abs(ks) ** 2, sigma))


def subspace_retention(ch, d):
    """Tr[D(P_d / d) P_d]."""
    dim = _dim_of(ch)
    proj = (np.arange(dim) < d).astype(float)
    return channel_overlap(ch, proj / d, proj)


# ---------------------------------------------------------------- relations

def _relation_f1(ch, reg):
    diag = reg.diagonal
    fe = entanglement_fidelity(ch, diag)
    dr = effective_dimension(diag)
    support = reg.support.astype(float)
    r2 = diag * diag
    tail = channel_overlap(ch, r2 / r2.sum(), support)
    return (dr * fe + tail) / (dr + 1)


def _relation_f2(ch, diag):
    """F_2 for the regularizer sqrt(R), with R given by ``diag``."""
    fe = entanglement_fidelity(ch, diag)
    dr = effective_dimension(diag)
    rho = diag / diag.sum()
    return (dr * fe + dr * channel_overlap(ch, rho, rho)) / (dr + 1)


def avg_fidelity_1(ch, R, method="analytic", design=None):
    """N_R E_psi <psi| R^+ D(psi) R^+ |psi> over an R-regularized 2-design.

    ``analytic`` evaluates (d_R F_e + Tr[D(rho_{R^2}) R R^+]) / (d_R + 1) with
    Kraus sums. ``design`` averages over ``design`` (by default the Kerred
    design for soft R, Construction 1 on the support for hard R).
    """
    dim = _dim_of(ch)
    reg = R if isinstance(R, Regularizer) else Regularizer.custom(_diag(R, dim))
    if method == "analytic":
        return _relation_f1(ch, reg)
    if method != "design":
        raise ValueError(f"unknown method {method!r}")
    if design is None:
        design = default_design(reg)
    rinv = reg.pinv_diagonal
    _check_support(design, reg)
    p2, p4 = reg.power_trace(2), reg.power_trace(4)
    p1 = reg.power_trace(1)
    norm = (p4 + p2 * p2) / (p2 + p1 * p1)
    return norm * design_channel_expectation(design, ch, left=rinv)


def avg_fidelity_2(ch, R, method="analytic", design=None):
    """E_psi <psi| D(psi) |psi> over an R-regularized 2-design.

    ``analytic`` uses the relation for the squared regularizer S = R^2:
    (d_S F_e^(S) + d_S Tr[D(rho_S) rho_S]) / (d_S + 1).
    """
    dim = _dim_of(ch)
    reg = R if isinstance(R, Regularizer) else Regularizer.custom(_diag(R, dim))
    if method == "analytic":
        return _relation_f2(ch, reg.diagonal ** 2)
    if method != "design":
        raise ValueError(f"unknown method {method!r}")
    if design is None:
        design = default_design(reg)
    return design_channel_expectation(design, ch)


def _check_support(design, reg):
    if reg.is_invertible:
        return
    outside = ~reg.support
    if isinstance(design, KerredDesign):
        raise SupportError("the Kerred design has full support; use a design inside the cutoff")
    states = _padded_states(design, reg.dim)
    leak = np.max(np.abs(states[:, outside]), initial=0.0)
    if leak > 1e-12:
        raise SupportError(f"design amplitude {leak:.2e} outside the regularizer support")


def default_design(reg):
    """Kerred design for soft R, Construction 1 on the cutoff for hard R."""
    if reg.kind == "soft":
        return _kerred(reg.beta, reg.dim)
    if reg.kind == "hard":
        if reg.cutoff == 1:
            return CPDesign([[1.0]], [1.0])
        return construction1_mub_design(reg.cutoff)
    raise ValueError("no default design for a custom regularizer")


_KERRED_CACHE = {}


def _kerred(beta, dim):
    key = (float(beta), int(dim))
    if key not in _KERRED_CACHE:
        _KERRED_CACHE.clear()
        _KERRED_CACHE[key] = KerredDesign(beta, dim)
    return _KERRED_CACHE[key]


def _padded_states(design, dim):
    states = np.asarray(design.states)
    if states.shape[1] > dim:
        raise ValueError("design lives on more levels than the channel")
    if states.shape[1] < dim:
        states = np.hstack([states, np.zeros((states.shape[0], dim - states.shape[1]))])
    return states


def design_channel_expectation(design, ch, left=None):
    """sum_K E_psi |<psi| L K |psi>|^2 with L = diag(``left``) (identity by default)."""
    dim = _dim_of(ch)
    left = np.ones(dim) if left is None else np.asarray(left, dtype=float)
    if isinstance(design, KerredDesign):
        if design.dim != dim:
            raise ValueError("design and channel truncations differ")
        if isinstance(ch, LossChannel):
            return _kerred_band_expectation(design, ch.band * left[:, None])
        ks = left[None, :, None] * _dense_stack(ch)
        return _kerred_dense_expectation(design, ks)
    states = _padded_states(design, dim)
    weights = np.asarray(design.weights, dtype=float)
    if isinstance(ch, LossChannel):
        vals = _kernels.band_kraus_fidelity(states, ch.band * left[:, None])
    else:
        ks = left[None, :, None] * _dense_stack(ch)
        inner = np.einsum("sa,kab,sb->sk", states.conj(), ks, states)
        vals = np.sum(np.abs(inner) ** 2, axis=1)
    return float(weights @ vals)


def _kerred_band_expectation(design, band):
    """Exact grid average for band-diagonal Kraus operators.

    <psi|K_i|psi> on a grid state is e^{i theta i} sum_m c_m e^{i phi (2mi + i^2)},
    so its squared modulus averages to sum c_m c_m' S_phi(2 i (m - m')).
    """
    dim = design.dim
    env = design.envelope
    fock = float(np.dot(design.fock_weights, band[:, 0] ** 2))
    grid = 0.0
    for i in range(dim):
        m = np.arange(dim - i)
        c = band[: dim - i, i] * env[m] * env[m + i]
        if not np.any(c):
            continue
        s = np.real(design.s_phi(2 * i * (m[:, None] - m[None, :])))
        grid += float(c @ s @ c)
    return fock + design.continuum_weight * grid


def _kerred_dense_expectation(design, ks):
    """sum_K sum M[c,b,a,d] K[a,c] conj(K[b,d]) from the design's moment blocks."""
    total = 0.0
    for idx, block in design.iter_blocks():
        # block[c', b, a, d] with c' = idx
        kc = ks[:, :, idx]
        total += float(np.real(np.einsum("ibad,kai,kbd->", block, kc, ks.conj())))
    return total


# ---------------------------------------------------------------- closed forms

def loss_fe_soft(beta, kappa):
    """(e^beta - 1)^2 / (e^beta - kappa)^2."""
    eb = math.exp(beta)
    return (eb - 1) ** 2 / (eb - kappa) ** 2


def loss_fe_hard(d, kappa):
    """(1 - kappa^d)^2 / ((1 - kappa)^2 d^2), written as a finite sum so kappa = 1 is regular."""
    return (sum(kappa ** m for m in range(d)) / d) ** 2


def loss_thermal_overlap(beta, kappa):
    """Tr[L(rho_R) rho_R] for R = R_beta: (e^beta - 1) / (e^beta + kappa^2)."""
    eb = math.exp(beta)
    return (eb - 1) / (eb + kappa * kappa)


def soft_effective_dimension(beta):
    """coth(beta / 2)."""
    return 1.0 / math.tanh(beta / 2)


def loss_f1_soft(beta, kappa):
    dr = soft_effective_dimension(beta)
    return (dr * loss_fe_soft(beta, kappa) + 1) / (dr + 1)


def loss_f2_soft(beta, kappa):
    """F_2 for the regularizer R_{beta/2}, via R_beta."""
    dr = soft_effective_dimension(beta)
    return dr * (loss_fe_soft(beta, kappa) + loss_thermal_overlap(beta, kappa)) / (dr + 1)


def loss_f2_soft_nbar(n_bar, kappa):
    """The same quantity after substituting e^beta = 1 + 1/n_bar."""
    n = n_bar
    num = (2 * n + 1) * ((1 - kappa) ** 2 * n + 2)
    den = 2 * ((1 - kappa) * n + 1) ** 2 * ((kappa * kappa + 1) * n + 1)
    return num / den


def loss_fe_soft_nbar(n_bar, kappa):
    return (1 + n_bar * (1 - kappa)) ** -2


def loss_f12_hard(d, kappa):
    """(d F_e + 1) / (d + 1) on the cutoff subspace."""
    return (d * loss_fe_hard(d, kappa) + 1) / (d + 1)


def coherent_fidelity_closed(n_bar, kappa):
    return 1.0 / (1.0 + n_bar * (1 - kappa) ** 2)


# ---------------------------------------------------------------- coherent states

def coherent_dim(n_bar):
    return int(math.ceil(4 * n_bar + 12 * math.sqrt(n_bar) + 20))


def coherent_avg_fidelity(n_bar, kappa, method="analytic", samples=100_000, seed=0, dim=None):
    """Average of <alpha| L(alpha) |alpha> over p(alpha) = e^{-|alpha|^2/n_bar} / (pi n_bar).

    The Monte-Carlo path draws alpha by Box-Muller with the radial uniform
    stratified, and evaluates each truncated coherent state exactly.
    """
    if n_bar <= 0:
        raise ValueError("n_bar must be > 0")
    if method == "analytic":
        return coherent_fidelity_closed(n_bar, kappa)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    dim = coherent_dim(n_bar) if dim is None else int(dim)
    rng = np.random.default_rng(seed)
    u1 = (rng.permutation(samples) + rng.random(samples)) / samples
    u2 = rng.random(samples)
    radius = np.sqrt(-n_bar * np.log1p(-u1))
    alphas = radius * np.exp(2j * math.pi * u2)
    amps = _coherent_batch(alphas, dim)
    ch = LossChannel(kappa, dim)
    return float(np.mean(_kernels.band_kraus_fidelity(amps, ch.band)))


def _coherent_batch(alphas, dim):
    n = np.arange(dim)
    r = np.abs(alphas)
    with np.errstate(divide="ignore"):
        logs = xlogy(n[None, :], r[:, None]) - 0.5 * gammaln(n + 1)[None, :]
    logs -= logs.max(axis=1, keepdims=True)
    amps = np.exp(logs) * np.exp(1j * np.outer(np.angle(alphas), n))
    return amps / np.linalg.norm(amps, axis=1, keepdims=True)


def coherent_pair_fidelity(alpha, kappa, dim):
    """<alpha| L(alpha) |alpha> for one truncated coherent state."""
    amps = coherent_state(dim, alpha)[None, :]
    return float(_kernels.band_kraus_fidelity(amps, LossChannel(kappa, dim).band)[0])


# ---------------------------------------------------------------- moment identities

def _moment_tensor(design):
    if isinstance(design, (KerredDesign, RegularizedEnsemble)):
        return design.moment_tensor()
    ens = RegularizedEnsemble(design.states, design.weights)
    return ens.moment_tensor()


def moment_identities_check(design, R, A, B):
    """Deviations of two second-moment identities for an R-regularized 2-design.

    E[<psi|A|psi> |psi><psi|] = (R^2 Tr(RAR) + R^2 A R^2) / Z and
    E[<psi|A|psi><psi|B|psi>] = (Tr(RAR) Tr(RBR) + Tr(R^2 A R^2 B)) / Z,
    with Z = (Tr R^2)^2 + Tr R^4. Returns (operator deviation, scalar deviation).
    """
    r = _diag(R)
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    m = _moment_tensor(design)
    r2 = r * r
    z = r2.sum() ** 2 + np.sum(r2 * r2)
    lhs_op = np.einsum("abcd,db->ac", m, A)
    rhs_op = (np.diag(r2) * np.sum(r2 * np.diag(A)) + r2[:, None] * A * r2[None, :]) / z
    lhs_s = np.einsum("abcd,ca,db->", m, A, B)
    ra = np.sum(r2 * np.diag(A))
    rb = np.sum(r2 * np.diag(B))
    rhs_s = (ra * rb + np.trace((r2[:, None] * A * r2[None, :]) @ B)) / z
    return float(np.max(np.abs(lhs_op - rhs_op))), float(abs(lhs_s - rhs_s))


# ---------------------------------------------------------------- loss curves

QUANTITIES = ("Fe_soft", "Fe_hard", "F1_soft", "F2_soft_halfbeta", "F12_hard", "F_coh")


@dataclass(frozen=True)
class FidelityReport:
    """Closed forms and numeric oracles for one (n_bar, kappa) point."""

    kappa: float
    n_bar: float
    dim: int
    analytic: dict
    numeric: dict
    design: dict
    soft_tail: float
    coherent_dim: int
    coherent_samples: int

    def max_gap(self, mc_tol=None):
        """Largest |analytic - numeric| over the deterministic oracles, and the MC gap."""
        det = max(
            abs(self.analytic[k] - v)
            for src in (self.numeric, self.design)
            for k, v in src.items()
            if k != "F_coh"
        )
        mc = abs(self.analytic["F_coh"] - self.numeric["F_coh"]) if "F_coh" in self.numeric else 0.0
        return det, mc

    def row(self):
        out = {"kappa": self.kappa, "n_bar": self.n_bar}
        out.update({k: self.analytic[k] for k in QUANTITIES})
        out.update({f"{k}_numeric": self.numeric[k] for k in QUANTITIES if k in self.numeric})
        out.update({f"{k}_design": self.design[k] for k in QUANTITIES if k in self.design})
        out["soft_tail"] = self.soft_tail
        out["D"] = self.dim
        out["coherent_D"] = self.coherent_dim
        out["coherent_samples"] = self.coherent_samples
        return out


def fidelity_point(n_bar, kappa, dim=None, samples=100_000, seed=0, design=True):
    beta = beta_for(n_bar)
    d = hard_cutoff_for(n_bar)
    dim = soft_truncation(beta / 2) if dim is None else int(dim)
    ch = LossChannel(kappa, dim)
    soft = Regularizer.soft(beta, dim)
    half = Regularizer.soft(beta / 2, dim)
    hard = Regularizer.hard(d, dim)
    analytic = {
        "Fe_soft": loss_fe_soft_nbar(n_bar, kappa),
        "Fe_hard": loss_fe_hard(d, kappa),
        "F1_soft": loss_f1_soft(beta, kappa),
        "F2_soft_halfbeta": loss_f2_soft_nbar(n_bar, kappa),
        "F12_hard": loss_f12_hard(d, kappa),
        "F_coh": coherent_fidelity_closed(n_bar, kappa),
    }
    numeric = {
        "Fe_soft": entanglement_fidelity(ch, soft),
        "Fe_hard": entanglement_fidelity(ch, hard),
        "F1_soft": avg_fidelity_1(ch, soft),
        "F2_soft_halfbeta": avg_fidelity_2(ch, half),
        "F12_hard": avg_fidelity_1(ch, hard),
    }
    if samples:
        numeric["F_coh"] = coherent_avg_fidelity(n_bar, kappa, "mc", samples=samples, seed=seed)
    des = {}
    if design:
        des = {
            "F1_soft": avg_fidelity_1(ch, soft, "design"),
            "F2_soft_halfbeta": avg_fidelity_2(ch, half, "design"),
            "F12_hard": avg_fidelity_1(ch, hard, "design"),
        }
    return FidelityReport(
        kappa=float(kappa),
        n_bar=float(n_bar),
        dim=dim,
        analytic=analytic,
        numeric=numeric,
        design=des,
        soft_tail=soft_tail(beta / 2, dim),
        coherent_dim=coherent_dim(n_bar) if samples else 0,
        coherent_samples=int(samples),
    )


def kappa_grid(steps=21):
    return np.linspace(0.0, 1.0, steps)


def loss_curve(n_bar, kappa_grid=None, dim=None, samples=100_000, seed=0, design=True, workers=None):
    """One :class:`FidelityReport` per transmissivity.

    Each grid point gets its own Monte-Carlo stream, spawned from ``seed``.
    """
    grid = np.linspace(0.0, 1.0, 21) if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    if np.any((grid < 0) | (grid > 1)):
        raise ValueError("kappa grid must lie in [0, 1]")
    seeds = np.random.SeedSequence(seed).spawn(len(grid))
    jobs = [(float(k), s) for k, s in zip(grid, seeds)]

    def run(job):
        kappa, ss = job
        return fidelity_point(n_bar, kappa, dim, samples, np.random.default_rng(ss), design)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]
