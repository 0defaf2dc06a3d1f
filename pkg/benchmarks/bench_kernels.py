"""Compare the compiled and pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from azosgd import make_overparam_lsq
from azosgd._backend import NOISE_CODES, available
from azosgd.sphere import DirectionStream, IndexStream

NOISE = (NOISE_CODES["machine_epsilon"], 2.0 ** -52, 1e-4)  # kind, level, width


def cases(dim, samples, batch, count):
    p = make_overparam_lsq(dim, samples, 0)
    E = np.ascontiguousarray(DirectionStream(0, dim).next_block(batch * count))
    idx = np.ascontiguousarray(IndexStream(0, samples).next_block(batch * count))
    return p, E, idx


def coefs_call(mod, p, E, idx):
    x = np.zeros(p.dim)
    return lambda: mod.lsq_two_point_coefs(p.matrix, p.rhs, x, E, idx, 1e-3, *NOISE)


def chunk_call(mod, p, E, idx, batch, count):
    record = np.zeros(count, dtype=np.uint8)
    record[-1] = 1
    values, xnorms = np.empty(count), np.empty(count)

    def run():
        x, x_ag = np.zeros(p.dim), np.zeros(p.dim)
        mod.lsq_azo_chunk(p.matrix, p.rhs, x, x_ag, E, idx, 0, count, batch, 1e-4, False,
                          p.radius, 1e-3, *NOISE, record, values, xnorms, -np.inf)
    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = available()
    if "cython" not in backends:
        print("compiled extension not built; timing the fallback only")
    print(f"{'case':<34}{'backend':<8}{'best ms':>10}{'speedup':>10}")
    for dim, samples, batch, count in [(16, 8, 8, 200), (256, 128, 8, 200), (256, 128, 64, 50)]:
        p, E, idx = cases(dim, samples, batch, count)
        for label, make in [("coefs", lambda m: coefs_call(m, p, E, idx)),
                            ("chunk", lambda m: chunk_call(m, p, E, idx, batch, count))]:
            times = {}
            for name, mod in backends.items():
                fn = make(mod)
                fn()
                times[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            for name, ms in times.items():
                ratio = times["python"] / ms
                case = f"{label} d={dim} m={samples} B={batch} K={count}"
                print(f"{case:<34}{name:<8}{ms:>10.3f}{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
