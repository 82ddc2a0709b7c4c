"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from wiener_imdd import _kernels_py
from wiener_imdd.channel import LinkParams, build_conv_operator, sample_cir

try:
    from wiener_imdd import _kernels as compiled
except ImportError:
    compiled = None


def cases():
    rng = np.random.default_rng(0)
    cir = sample_cir(LinkParams())
    op = build_conv_operator(cir, cir.M)
    psi = np.asarray(op.psi_mat)
    u = rng.standard_normal(2 * 200_000 + op.K)
    g = rng.standard_normal(op.K)
    small = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    sym = rng.uniform(0, 1, (100_000, 4))
    noise = rng.standard_normal((100_000, 6))
    tgt = sym[:, 1].copy()
    shift = np.ones(6)
    return [
        (f"gram_terms K={op.K} N'={op.n_prime}", lambda m: m.gram_terms(psi)),
        (f"sliding_estimate K={op.K}, 2e5 estimates", lambda m: m.sliding_estimate(u, g, 2, 200_000)),
        ("accumulate_moments K=6 N'=4, 1e5 draws", lambda m: m.accumulate_moments(small, sym, noise, tgt, shift, 0.5)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("python", _kernels_py)] + ([("compiled", compiled)] if compiled else [])
    print(f"{'kernel':<44}" + "".join(f"{name:>12}" for name, _ in impls) + ("     speedup" if compiled else ""))
    for label, fn in cases():
        best = []
        for _, mod in impls:
            fn(mod)  # warm up
            best.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        line = f"{label:<44}" + "".join(f"{t * 1e3:>10.2f}ms" for t in best)
        if compiled:
            line += f"{best[0] / best[1]:>11.1f}x"
        print(line)
    if compiled is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
