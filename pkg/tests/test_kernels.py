import os
import subprocess
import sys

import numpy as np
import pytest

from cvdesigns import _kernels
from cvdesigns._kernels import NUMBA_AVAILABLE, NUMBA_KERNELS, NUMPY_KERNELS, _LOOP_SOURCES

BACKENDS = {"numpy": NUMPY_KERNELS, "loops": _LOOP_SOURCES}
if NUMBA_AVAILABLE:
    BACKENDS["numba"] = NUMBA_KERNELS


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def inputs(name):
    rng = np.random.default_rng(0)
    rho = random_state(6, 1)
    if name == "diophantine_solutions":
        return (12,)
    if name == "triple_delta_sum":
        mat = np.zeros((6, 6), dtype=complex)
        mat[1, 3] = mat[3, 1] = 1.0
        mat[2, 2] = 0.5
        mat[0, 4] = 0.3j
        mat[4, 0] = -0.3j
        rows, cols = np.nonzero(mat)
        return (rows.astype(np.int64), cols.astype(np.int64), mat[rows, cols], rho)
    if name == "phase_modes":
        return (rho, rng.random(50) * 2 * np.pi, -1.0)
    if name == "phase_cdf_invert":
        modes = NUMPY_KERNELS["phase_modes"](rho, rng.random(40) * 2 * np.pi, -1.0)
        return (modes, rng.random(40), 4096, -1.0)
    if name == "flip_pair_values":
        n = 300
        return (
            rng.random(n) < 0.2,
            rng.integers(0, 6, n).astype(np.int64),
            rng.random(n) * 2 * np.pi,
            rng.random(n) * 2 * np.pi,
            np.array([0, 1, 2], dtype=np.int64),
            np.array([1, 3, 5], dtype=np.int64),
            np.array([-1, 2, 0], dtype=np.int64),
        )
    if name == "band_kraus_fidelity":
        amps = rng.normal(size=(30, 8)) + 1j * rng.normal(size=(30, 8))
        return (amps, rng.random((8, 8)))
    raise KeyError(name)


@pytest.mark.parametrize("name", sorted(NUMPY_KERNELS))
@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_backend_matches_numpy(name, backend):
    args = inputs(name)
    ref = NUMPY_KERNELS[name](*args)
    got = BACKENDS[backend][name](*args)
    if name == "diophantine_solutions":
        assert sorted(map(tuple, np.asarray(got))) == sorted(map(tuple, ref))
    elif name == "phase_cdf_invert":
        assert np.max(np.abs(np.asarray(got) - ref)) < 1e-9
    else:
        assert np.allclose(got, ref, atol=1e-12)


def test_all_backends_expose_the_same_kernels():
    for table in BACKENDS.values():
        assert set(table) == set(NUMPY_KERNELS)


def test_cdf_inversion_hits_the_target():
    from cvdesigns.shadows import phase_cdf

    rho = random_state(5, 3)
    phis = np.array([0.4, 2.2])
    u = np.array([0.1, 0.77])
    modes = _kernels.phase_modes(rho, phis, -1)
    thetas = _kernels.phase_cdf_invert(modes, u, 4096, -1)
    for t, p, target in zip(thetas, phis, u):
        assert phase_cdf(rho, t, p) == pytest.approx(target, abs=1e-10)


def test_dispatch_wrappers_coerce_types():
    sols = _kernels.diophantine_solutions(4)
    assert (1, 2, 2, 1) in set(map(tuple, np.asarray(sols)))
    val = _kernels.triple_delta_sum([0], [0], [1.0], np.diag([1.0, 0.0]))
    assert isinstance(val, complex)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CVDESIGNS_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import cvdesigns; print(cvdesigns.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_configure_threads_without_env(monkeypatch):
    monkeypatch.delenv("CVDESIGNS_THREADS", raising=False)
    assert _kernels.configure_threads() is None
    if NUMBA_AVAILABLE:
        assert _kernels.configure_threads(1) == 1
