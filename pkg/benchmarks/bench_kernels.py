"""Benchmark the compiled pair-loop kernels against the numpy fallback.

Both backends are imported directly (bypassing the auto-selection in
rothlab._kernels) so one process can time and cross-check them on identical
inputs. Results must match exactly; any mismatch aborts the run.

Usage: python3 benchmarks/bench_kernels.py [--orders 1155,2001,4095] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rothlab._kernels import _pykernels
from rothlab.groups import Group
from rothlab.progressions import MIDPOINT

try:
    from rothlab._kernels import _ckernels
except ImportError:
    _ckernels = None


def _group_for(order: int) -> Group:
    # split one composite order into a few invariant factors so the
    # mixed-radix index path gets exercised alongside the cyclic one
    if order == 1155:
        return Group((3, 5, 7, 11))
    if order == 4095:
        return Group((9, 455))
    return Group((order,))


def _time(fn, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_order(group: Group, rng: np.random.Generator, repeats: int) -> list[dict]:
    n = group.order
    factors = np.asarray(group.factors, np.int64)
    strides = np.asarray(group.strides, np.int64)
    masks = tuple(
        np.ascontiguousarray(rng.random(n) < 0.3, dtype=np.uint8) for _ in range(3)
    )
    values = tuple(
        np.ascontiguousarray(rng.standard_normal(n), dtype=np.complex128)
        for _ in range(3)
    )
    elements = np.flatnonzero(np.frombuffer(masks[0], dtype=np.uint8)).astype(np.int64)
    membership = np.frombuffer(masks[0], dtype=np.uint8).astype(bool)

    cases = [
        ("pattern_count", lambda mod: mod.pattern_count(factors, strides, masks, MIDPOINT)),
        ("trilinear_sum", lambda mod: mod.trilinear_sum(factors, strides, values, MIDPOINT)),
        ("pair_progression_count",
         lambda mod: mod.pair_progression_count(factors, strides, membership, elements)),
    ]
    rows = []
    for name, call in cases:
        t_py, r_py = _time(lambda: call(_pykernels), repeats)
        row = {"order": n, "kernel": name, "numpy_s": t_py}
        if _ckernels is not None:
            t_c, r_c = _time(lambda: call(_ckernels), repeats)
            if isinstance(r_py, complex):
                assert abs(r_py - r_c) <= 1e-9 * max(1.0, abs(r_py)), (name, n)
            else:
                assert r_py == r_c, (name, n, r_py, r_c)
            row["cython_s"] = t_c
            row["speedup"] = t_py / t_c if t_c > 0 else float("inf")
        rows.append(row)
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--orders", default="1155,2001,4095",
                        help="comma-separated group orders")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats per case (best is reported)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled extension not importable; timing the numpy fallback only")

    rng = np.random.default_rng(args.seed)
    rows = []
    for order in (int(s) for s in args.orders.split(",")):
        rows.extend(bench_order(_group_for(order), rng, args.repeats))

    header = f"{'order':>6}  {'kernel':<24}{'numpy':>10}{'cython':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for row in rows:
        cy = f"{row['cython_s'] * 1e3:8.2f}ms" if "cython_s" in row else f"{'n/a':>10}"
        sp = f"{row['speedup']:8.1f}x" if "speedup" in row else f"{'n/a':>9}"
        print(f"{row['order']:>6}  {row['kernel']:<24}"
              f"{row['numpy_s'] * 1e3:8.2f}ms{cy}{sp}")


if __name__ == "__main__":
    main()
