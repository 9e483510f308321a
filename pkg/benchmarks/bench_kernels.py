"""Time each hot kernel under numpy and numba.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba column includes one warm-up call so compilation is not counted.
"""

import argparse
import time

import numpy as np

from cvdesigns._kernels import NUMBA_AVAILABLE, NUMBA_KERNELS, NUMPY_KERNELS
from cvdesigns.fock_core import coherent_state
from cvdesigns.fidelity import LossChannel


def workloads():
    rng = np.random.default_rng(0)
    psi = coherent_state(24, 1.0 + 0.5j)
    rho = np.outer(psi, psi.conj())
    phis = rng.random(20_000) * 2 * np.pi
    modes = NUMPY_KERNELS["phase_modes"](rho, phis, -1.0)
    mat = np.zeros((24, 24), dtype=complex)
    for a in range(0, 24, 3):
        mat[a, (a + 5) % 24] = mat[(a + 5) % 24, a] = 1.0
    rows, cols = np.nonzero(mat)
    n = 200_000
    amps = rng.normal(size=(4000, 120)) + 1j * rng.normal(size=(4000, 120))
    return {
        "diophantine_solutions": (40,),
        "triple_delta_sum": (rows.astype(np.int64), cols.astype(np.int64), mat[rows, cols], rho),
        "phase_modes": (rho, phis, -1.0),
        "phase_cdf_invert": (modes, rng.random(phis.size), 4096, -1.0),
        "flip_pair_values": (
            rng.random(n) < 0.14, rng.integers(0, 20, n).astype(np.int64),
            rng.random(n) * 2 * np.pi, rng.random(n) * 2 * np.pi,
            np.arange(20, dtype=np.int64), np.arange(1, 21, dtype=np.int64), np.full(20, -1, dtype=np.int64),
        ),
        "band_kraus_fidelity": (amps, np.ascontiguousarray(LossChannel(0.7, 120).band)),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in workloads().items():
        t_np = best_of(NUMPY_KERNELS[name], inputs, args.repeat)
        if NUMBA_AVAILABLE:
            NUMBA_KERNELS[name](*inputs)
            t_nb = best_of(NUMBA_KERNELS[name], inputs, args.repeat)
            print(f"{name:<24}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<24}{1e3 * t_np:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
