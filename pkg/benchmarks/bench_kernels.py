"""Compare the numba and pure-numpy float kernels.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Each kernel is warmed up once (numba compiles on first call), then timed
as the best of ``--repeat`` runs.  Results of both backends are checked
for agreement before timing is reported.
"""

import argparse
import time

import numpy as np

from ostro import _accel


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1_000_000, help="profile length")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    p0 = rng.uniform(0.01, 0.99, args.n)
    p1 = 1.0 - p0
    ts = rng.uniform(-1e3, 1e3, 2000)
    q = np.array([1, 2, 6, 42, 1806, 3263442, 10650056950806, 1.1342371305542185e26], dtype=np.float64)
    four = np.full(q.shape, 0.84)
    uniforms = rng.random((args.n // 10, 16))
    bits = np.full(16, 0.5)

    cases = [
        ("entropy_prefix", (p0, p1)),
        ("log_max_prefix", (p0, p1)),
        ("kakutani_prefix", (p0, p1)),
        ("cf_modulus_batch", (ts, 1.0 / q, four)),
        ("pack_codes", (uniforms, bits)),
    ]
    print(f"backend available: numba={_accel.HAS_NUMBA}  n={args.n}")
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, data in cases:
        ref = getattr(_accel, f"{name}_numpy")
        t_np = best_of(ref, data, args.repeat)
        if _accel.HAS_NUMBA:
            fast = getattr(_accel, f"{name}_numba")
            np.testing.assert_allclose(fast(*data), ref(*data), rtol=1e-9)
            t_nb = best_of(fast, data, args.repeat)
            print(f"{name:<18} {t_np * 1e3:>11.2f} {t_nb * 1e3:>11.2f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<18} {t_np * 1e3:>11.2f} {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
