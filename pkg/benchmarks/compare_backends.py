"""Compiled vs pure-Python merge throughput, at API and kernel level.

    python benchmarks/compare_backends.py [--repeats N]
"""
import argparse

from lat import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    rows = bench.run(backends=("python", "cython"), levels=("api", "kernel"),
                     repeats=args.repeats)
    by_key = {(r["backend"], r["level"], r["sweep"], r["n"], r["k"]): r["seconds"] for r in rows}
    print("level\tsweep\tn\tk\tpython_s\tcython_s\tspeedup")
    for (backend, level, sweep, n, k), sec in by_key.items():
        if backend != "python":
            continue
        fast = by_key[("cython", level, sweep, n, k)]
        print(f"{level}\t{sweep}\t{n}\t{k}\t{sec:.5f}\t{fast:.5f}\t{sec / fast:.1f}x")


if __name__ == "__main__":
    main()
