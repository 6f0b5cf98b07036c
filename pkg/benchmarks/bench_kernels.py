"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""
import argparse
import csv
import sys
import time

import numpy as np

from rppgbench import _kernels
from rppgbench.timing import measure_frame_time


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def kernel_cases(T=600, H=64, W=64, L=48, seed=0):
    rng = np.random.default_rng(seed)
    frames = rng.integers(0, 256, size=(T, H, W, 3), dtype=np.uint8)
    boxes = np.tile(np.array([8, 8, W - 8, H - 8], dtype=np.intp), (T, 1))
    boxes[::2, 0] = 4  # defeat the equal-box fast path
    rgb = 100.0 + rng.normal(0, 1, size=(T, 3))
    return {
        "box_means": lambda k: k.box_means(frames, boxes),
        "pos_overlap_add": lambda k: k.pos_overlap_add(rgb, L),
        "chrom_overlap_add": lambda k: k.chrom_overlap_add(rgb, L),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--iterations", type=int, default=1000, help="frames for the streaming timing")
    p.add_argument("--csv", help="also write results to this CSV file")
    args = p.parse_args(argv)

    backends = _kernels.available_backends()
    rows = []
    for name, case in kernel_cases().items():
        for b in backends:
            rows.append(("kernel", name, b, _best_of(lambda: case(_kernels.get_backend(b)), args.repeat)))
    for method in ("G", "CHROM", "POS"):
        for b in backends:
            res = measure_frame_time(method, 64, 64, args.iterations, backend=b)
            rows.append(("frame", method, b, res.mean_ms))

    print(f"{'kind':<7}{'case':<20}{'backend':<9}{'ms':>10}")
    for kind, case, b, ms in rows:
        print(f"{kind:<7}{case:<20}{b:<9}{ms:>10.4f}")
    if "cython" in backends:
        print("\nspeedup (python / cython):")
        by = {(k, c, b): ms for k, c, b, ms in rows}
        for kind, case, b, _ in rows:
            if b == "cython":
                print(f"  {case:<20}{by[(kind, case, 'python')] / by[(kind, case, 'cython')]:6.1f}x")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "case", "backend", "ms"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
