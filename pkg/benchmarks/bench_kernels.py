"""Time the compiled and pure-Python kernels on the workloads the simulator runs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from metasheet import hopfield
from metasheet.kernels import backends
from metasheet.memristor import MemristorParams


def workloads():
    prm = MemristorParams().vector()
    volts = np.full(2000, 4.3)  # one 20 s INIT pulse at 10 ms steps
    pats = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [-1, -1, 1, 1], [1, -1, 1, -1]])
    j = hopfield.hebbian_matrix(pats)
    rng = np.random.default_rng(0)
    starts = rng.choice([-1, 1], size=(3000, 4)).astype(np.int64)
    idx = rng.integers(0, 4, size=(3000, 80)).astype(np.int64)
    return {
        "integrate_dose (2000 steps, 500 ohm)":
            lambda mod: mod.integrate_dose(0.0, volts, 0.01, 500.0, prm, 1.0),
        "retrieve_batch (3000 trials, N=4)":
            lambda mod: mod.retrieve_batch(j, starts, idx, 4, True),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    print(f"{'workload':40s} " + " ".join(f"{name:>12s}" for name in mods) + "   speedup")
    for label, fn in workloads().items():
        best = {name: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                for name, mod in mods.items()}
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{label:40s} " + " ".join(f"{best[n] * 1e3:10.2f}ms" for n in mods)
              + f"   {speed:7.1f}x")


if __name__ == "__main__":
    main()
