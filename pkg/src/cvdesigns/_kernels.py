"""Hot loops with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and neither
``CVDESIGNS_NO_NUMBA`` nor ``NUMBA_DISABLE_JIT`` is set.  Both paths are
always importable through :data:`NUMPY_KERNELS` and :data:`NUMBA_KERNELS`
so the benchmark and the equivalence tests can call them side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

_TWO_PI = 2.0 * math.pi


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


try:
    if _flag("CVDESIGNS_NO_NUMBA") or _flag("NUMBA_DISABLE_JIT"):
        raise ImportError("numba disabled by environment")
    import numba

    NUMBA_AVAILABLE = True
    jit = numba.njit(cache=True, nogil=True)
except ImportError:
    numba = None
    NUMBA_AVAILABLE = False
    jit = None


def configure_threads(n=None):
    """Cap the numba worker count (from ``CVDESIGNS_THREADS`` by default)."""
    if n is None:
        raw = os.environ.get("CVDESIGNS_THREADS", "").strip()
        if not raw:
            return None
        n = int(raw)
    if numba is None:
        return None
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


# ---------------------------------------------------------------------------
# Diophantine brute force: a+b = c+d and a^2+b^2 = c^2+d^2 on [0, n]^4
# ---------------------------------------------------------------------------

def _np_diophantine_solutions(n):
    a, b, c, d = np.indices((n + 1,) * 4).reshape(4, -1)
    mask = (a + b == c + d) & (a * a + b * b == c * c + d * d)
    return np.stack([a[mask], b[mask], c[mask], d[mask]], axis=1).astype(np.int64)


def _py_diophantine_solutions(n):
    count = 0
    for a in range(n + 1):
        for b in range(n + 1):
            for c in range(n + 1):
                d = a + b - c
                if 0 <= d <= n and a * a + b * b == c * c + d * d:
                    count += 1
    out = np.empty((count, 4), dtype=np.int64)
    k = 0
    for a in range(n + 1):
        for b in range(n + 1):
            for c in range(n + 1):
                d = a + b - c
                if 0 <= d <= n and a * a + b * b == c * c + d * d:
                    out[k, 0] = a
                    out[k, 1] = b
                    out[k, 2] = c
                    out[k, 3] = d
                    k += 1
    return out


# ---------------------------------------------------------------------------
# Triple Diophantine sum used by the shadow variance:
#   sum O[n1,m1] O[n2,m2] rho[n3,m3]
#   over n1+n2+n3 = m1+m2+m3 and n1^2+n2^2+n3^2 = m1^2+m2^2+m3^2
# ---------------------------------------------------------------------------

def _np_triple_delta_sum(rows, cols, vals, rho):
    dim = rho.shape[0]
    total = 0j
    n3 = np.arange(dim)
    chunk = max(1, 2_000_000 // max(dim, 1))
    for start in range(0, len(rows), chunk):
        r1 = rows[start:start + chunk, None, None]
        c1 = cols[start:start + chunk, None, None]
        v1 = vals[start:start + chunk, None, None]
        r2 = rows[None, :, None]
        c2 = cols[None, :, None]
        v2 = vals[None, :, None]
        m3 = r1 + r2 + n3[None, None, :] - c1 - c2
        ok = (m3 >= 0) & (m3 < dim)
        ok &= r1 * r1 + r2 * r2 + n3 * n3 == c1 * c1 + c2 * c2 + m3 * m3
        m3c = np.where(ok, m3, 0)
        term = v1 * v2 * rho[np.broadcast_to(n3, m3c.shape), m3c]
        total += term[ok].sum()
    return complex(total)


def _py_triple_delta_sum(rows, cols, vals, rho):
    dim = rho.shape[0]
    total = 0j
    for e1 in range(len(rows)):
        n1 = rows[e1]
        m1 = cols[e1]
        for e2 in range(len(rows)):
            n2 = rows[e2]
            m2 = cols[e2]
            w = vals[e1] * vals[e2]
            for n3 in range(dim):
                m3 = n1 + n2 + n3 - m1 - m2
                if m3 < 0 or m3 >= dim:
                    continue
                if n1 * n1 + n2 * n2 + n3 * n3 == m1 * m1 + m2 * m2 + m3 * m3:
                    total += w * rho[n3, m3]
    return total


# ---------------------------------------------------------------------------
# Fourier modes of the phase-branch density for a batch of Kerr angles:
#   c_k(phi) = sum_n rho[n, n+k] exp(i s phi (2 n k + k^2)),  k = 1..D-1
# ---------------------------------------------------------------------------

def _np_phase_modes(rho, phis, sign):
    dim = rho.shape[0]
    out = np.zeros((len(phis), max(dim - 1, 1)), dtype=np.complex128)
    for k in range(1, dim):
        n = np.arange(dim - k)
        band = np.diagonal(rho, offset=k)
        phase = np.exp(1j * sign * np.outer(phis, 2 * n * k + k * k))
        out[:, k - 1] = phase @ band
    return out


def _py_phase_modes(rho, phis, sign):
    dim = rho.shape[0]
    out = np.zeros((len(phis), max(dim - 1, 1)), dtype=np.complex128)
    for s in range(len(phis)):
        for k in range(1, dim):
            acc = 0j
            for n in range(dim - k):
                ang = sign * phis[s] * (2 * n * k + k * k)
                acc += rho[n, n + k] * complex(math.cos(ang), math.sin(ang))
            out[s, k - 1] = acc
    return out


# ---------------------------------------------------------------------------
# Inverse CDF of p(theta) = (1 + 2 Re sum_k c_k e^{i s k theta}) / 2pi on [0, 2pi).
# The grid brackets the root by bisection; Newton steps polish inside the cell.
# ---------------------------------------------------------------------------

def _np_phase_cdf_invert(modes, u, n_grid, sign):
    n_samp, n_modes = modes.shape
    k = np.arange(1, n_modes + 1)
    z = modes / (1j * sign * k)

    def cdf(theta):
        e = np.exp(1j * sign * np.outer(theta, k))
        return theta / _TWO_PI + (np.real(np.sum(z * (e - 1.0), axis=1))) / math.pi

    def pdf(theta):
        e = np.exp(1j * sign * np.outer(theta, k))
        return (1.0 + 2.0 * np.real(np.sum(modes * e, axis=1))) / _TWO_PI

    step = _TWO_PI / n_grid
    lo = np.zeros(n_samp, dtype=np.int64)
    hi = np.full(n_samp, n_grid, dtype=np.int64)
    while np.any(hi - lo > 1):
        mid = (lo + hi) // 2
        below = cdf(mid * step) <= u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    a = lo * step
    b = hi * step
    fa = cdf(a)
    fb = cdf(b)
    span = np.where(fb > fa, fb - fa, 1.0)
    theta = a + (u - fa) / span * step
    for _ in range(3):
        dens = pdf(theta)
        safe = dens > 1e-300
        upd = np.where(safe, (cdf(theta) - u) / np.where(safe, dens, 1.0), 0.0)
        theta = np.clip(theta - upd, a, b)
    return np.mod(theta, _TWO_PI)


def _py_cdf_at(modes_row, z_row, theta, sign):
    n_modes = modes_row.shape[0]
    base = complex(math.cos(sign * theta), math.sin(sign * theta))
    e = 1.0 + 0j
    acc_f = 0.0
    acc_p = 0.0
    for j in range(n_modes):
        e = e * base
        acc_f += (z_row[j] * (e - 1.0)).real
        acc_p += (modes_row[j] * e).real
    return theta / _TWO_PI + acc_f / math.pi, (1.0 + 2.0 * acc_p) / _TWO_PI


def _make_phase_cdf_invert(cdf_at):
    def phase_cdf_invert(modes, u, n_grid, sign):
        n_samp, n_modes = modes.shape
        out = np.empty(n_samp)
        z = np.empty(n_modes, dtype=np.complex128)
        step = _TWO_PI / n_grid
        for s in range(n_samp):
            for j in range(n_modes):
                z[j] = modes[s, j] / (1j * sign * (j + 1))
            row = modes[s]
            target = u[s]
            lo = 0
            hi = n_grid
            while hi - lo > 1:
                mid = (lo + hi) // 2
                f_mid, _ = cdf_at(row, z, mid * step, sign)
                if f_mid <= target:
                    lo = mid
                else:
                    hi = mid
            a = lo * step
            b = hi * step
            fa, _ = cdf_at(row, z, a, sign)
            fb, _ = cdf_at(row, z, b, sign)
            theta = a + (target - fa) / (fb - fa) * step if fb > fa else a
            for _ in range(3):
                f, dens = cdf_at(row, z, theta, sign)
                if dens > 1e-300:
                    theta -= (f - target) / dens
                if theta < a:
                    theta = a
                elif theta > b:
                    theta = b
            out[s] = theta % _TWO_PI
        return out

    return phase_cdf_invert


_py_phase_cdf_invert = _make_phase_cdf_invert(_py_cdf_at)


# ---------------------------------------------------------------------------
# Shadow estimates for |a><b| + |b><a| (+ |c><c| when c >= 0) observables.
# ---------------------------------------------------------------------------

def _np_flip_pair_values(is_fock, n, theta, phi, a, b, c):
    has_c = (c >= 0).astype(float)
    fock = (_TWO_PI + 1.0) * (n[:, None] == c[None, :]) - has_c[None, :]
    arg = np.outer(theta, a - b) + np.outer(phi, a * a - b * b)
    phase = (2.0 + 1.0 / math.pi) * np.cos(arg) + has_c[None, :] / _TWO_PI
    return np.where(is_fock[:, None], fock, phase)


def _py_flip_pair_values(is_fock, n, theta, phi, a, b, c):
    n_samp = is_fock.shape[0]
    n_obs = a.shape[0]
    out = np.empty((n_samp, n_obs))
    amp = 2.0 + 1.0 / math.pi
    for s in range(n_samp):
        for j in range(n_obs):
            has_c = 1.0 if c[j] >= 0 else 0.0
            if is_fock[s]:
                out[s, j] = (_TWO_PI + 1.0) * (1.0 if n[s] == c[j] else 0.0) - has_c
            else:
                arg = theta[s] * (a[j] - b[j]) + phi[s] * (a[j] * a[j] - b[j] * b[j])
                out[s, j] = amp * math.cos(arg) + has_c / _TWO_PI
    return out


# ---------------------------------------------------------------------------
# Per-sample channel fidelity <psi| sum_i K_i psi psi^* K_i^dag |psi> for
# Kraus operators supported on a single superdiagonal: K_i[m, m+i] = kc[m, i].
# ---------------------------------------------------------------------------

def _np_band_kraus_fidelity(amps, kc):
    n_samp, dim = amps.shape
    out = np.zeros(n_samp)
    conj = amps.conj()
    for i in range(dim):
        m = dim - i
        inner = (conj[:, :m] * amps[:, i:]) @ kc[:m, i]
        out += np.abs(inner) ** 2
    return out


def _py_band_kraus_fidelity(amps, kc):
    n_samp, dim = amps.shape
    out = np.zeros(n_samp)
    for s in range(n_samp):
        total = 0.0
        for i in range(dim):
            acc = 0j
            for m in range(dim - i):
                acc += kc[m, i] * amps[s, m].conjugate() * amps[s, m + i]
            total += acc.real * acc.real + acc.imag * acc.imag
        out[s] = total
    return out


NUMPY_KERNELS = {
    "diophantine_solutions": _np_diophantine_solutions,
    "triple_delta_sum": _np_triple_delta_sum,
    "phase_modes": _np_phase_modes,
    "phase_cdf_invert": _np_phase_cdf_invert,
    "flip_pair_values": _np_flip_pair_values,
    "band_kraus_fidelity": _np_band_kraus_fidelity,
}

_LOOP_SOURCES = {
    "diophantine_solutions": _py_diophantine_solutions,
    "triple_delta_sum": _py_triple_delta_sum,
    "phase_modes": _py_phase_modes,
    "phase_cdf_invert": _py_phase_cdf_invert,
    "flip_pair_values": _py_flip_pair_values,
    "band_kraus_fidelity": _py_band_kraus_fidelity,
}

if NUMBA_AVAILABLE:
    NUMBA_KERNELS = {
        name: jit(fn) for name, fn in _LOOP_SOURCES.items() if name != "phase_cdf_invert"
    }
    NUMBA_KERNELS["phase_cdf_invert"] = jit(_make_phase_cdf_invert(jit(_py_cdf_at)))
else:
    NUMBA_KERNELS = {}

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"
_ACTIVE = NUMBA_KERNELS if NUMBA_AVAILABLE else NUMPY_KERNELS


def _prep_rows(rows, cols, vals):
    return (np.ascontiguousarray(rows, dtype=np.int64),
            np.ascontiguousarray(cols, dtype=np.int64),
            np.ascontiguousarray(vals, dtype=np.complex128))


def diophantine_solutions(n):
    """All (a, b, c, d) in [0, n]^4 with equal sums and equal sums of squares."""
    return _ACTIVE["diophantine_solutions"](int(n))


def triple_delta_sum(rows, cols, vals, rho):
    rows, cols, vals = _prep_rows(rows, cols, vals)
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    return complex(_ACTIVE["triple_delta_sum"](rows, cols, vals, rho))


def phase_modes(rho, phis, sign):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    phis = np.ascontiguousarray(phis, dtype=np.float64)
    return _ACTIVE["phase_modes"](rho, phis, float(sign))


def phase_cdf_invert(modes, u, n_grid, sign):
    modes = np.ascontiguousarray(modes, dtype=np.complex128)
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _ACTIVE["phase_cdf_invert"](modes, u, int(n_grid), float(sign))


def flip_pair_values(is_fock, n, theta, phi, a, b, c):
    return _ACTIVE["flip_pair_values"](
        np.ascontiguousarray(is_fock, dtype=np.bool_),
        np.ascontiguousarray(n, dtype=np.int64),
        np.ascontiguousarray(theta, dtype=np.float64),
        np.ascontiguousarray(phi, dtype=np.float64),
        np.ascontiguousarray(a, dtype=np.int64),
        np.ascontiguousarray(b, dtype=np.int64),
        np.ascontiguousarray(c, dtype=np.int64),
    )


def band_kraus_fidelity(amps, kc):
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    kc = np.ascontiguousarray(kc, dtype=np.float64)
    return _ACTIVE["band_kraus_fidelity"](amps, kc)
