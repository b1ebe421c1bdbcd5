"""Compare the compiled column kernel with the numpy implementation.

Runs exact flatness sweeps on a few Dynkin connections with each backend,
checks that both give the same defects and prints wall-clock times.

    python benchmarks/bench_column_step.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from biunitary import flatness
from biunitary.ade import dynkin, ocneanu_connection

CASES = [("E6", (4, 4)), ("E7", (4, 4)), ("D7", (4, 4)), ("E8", (4, 4))]


def timed(W, base, size, repeat):
    best, rep = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = flatness.is_flat(W, base, size, mode="exact")
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["compiled"] if flatness._compiled_step is not None else [])
    print(f"{'case':<6} {'size':<7} " + " ".join(f"{b:>10}" for b in backends) + "   speedup  agree")
    old = flatness.get_backend()
    try:
        for name, size in CASES:
            d = dynkin(name)
            W = ocneanu_connection(d)
            times, defects = [], []
            for b in backends:
                flatness.set_backend(b)
                t, rep = timed(W, d.basepoint, size, args.repeat)
                times.append(t)
                defects.append(np.array(rep.defect))
            agree = all(np.allclose(defects[0], x, atol=1e-12) for x in defects[1:])
            speed = f"{times[0] / times[-1]:8.2f}x" if len(times) > 1 else "       -"
            print(f"{name:<6} {str(size):<7} " + " ".join(f"{t:9.3f}s" for t in times) + f"  {speed}  {agree}")
    finally:
        flatness.set_backend(old)


if __name__ == "__main__":
    main()
