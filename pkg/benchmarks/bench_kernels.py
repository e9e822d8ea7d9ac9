"""Compare the numba and numpy implementations of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--size 20000]

Both implementations are imported directly, so the BODEFRAC_NUMBA flag does
not matter here.  Each row reports the best-of-``repeat`` wall time and checks
that the two versions agree.
"""

import argparse
import time

import numpy as np

from bodefrac import _kernels as K


def best_time(fn, repeat):
    fn()  # warm-up (triggers compilation for numba)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(size, rng):
    s = (rng.normal(size=size) + 1j * rng.normal(size=size)) * 3.0
    coeffs = rng.normal(size=9) + 1j * rng.normal(size=9)
    zeros = rng.uniform(0.1, 1.0, 50) + 1j * rng.uniform(-20, 20, 50)
    orders = np.ones(50)
    monic = coeffs / coeffs[-1]
    z0 = np.exp(2j * np.pi * (np.arange(8) + 0.25) / 8) * 2.0
    raw = np.angle(np.exp(1j * np.cumsum(rng.uniform(-1.0, 1.0, size))))
    return {
        "horner": (lambda: K.horner_np(coeffs, s), lambda: K.horner_nb(coeffs, s)),
        "horner_deriv": (lambda: K.horner_deriv_np(coeffs, s)[1], lambda: K.horner_deriv_nb(coeffs, s)[1]),
        "blaschke_log": (lambda: K.blaschke_log_np(s, zeros, orders), lambda: K.blaschke_log_nb(s, zeros, orders)),
        "aberth(deg 8)": (
            lambda: np.sort_complex(K.aberth_np(monic, z0, 500, 1e-14)[0]),
            lambda: np.sort_complex(K.aberth_nb(monic, z0, 500, 1e-14)[0]),
        ),
        "unwrap_sequence": (lambda: K.unwrap_sequence_np(raw, 0.0), lambda: K.unwrap_sequence_nb(raw, 0.0)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--size", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if K.numba is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for name, (f_np, f_nb) in cases(args.size, rng).items():
        t_np = best_time(f_np, args.repeat)
        t_nb = best_time(f_nb, args.repeat)
        agree = np.allclose(f_np(), f_nb(), rtol=1e-9, atol=1e-9)
        print(f"{name:<18}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.2f}  {agree}")


if __name__ == "__main__":
    main()
