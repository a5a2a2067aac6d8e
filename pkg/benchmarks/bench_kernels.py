"""Benchmark the mixture log-density kernels, numba against pure numpy.

Runs the same workloads through both implementations returned by
``chaincert.kernels.get_impl`` and reports wall time plus the speedup.
Doubles as a parity check: the two backends must agree on every output
to tight float tolerance, and the script exits 1 if they do not.

Workloads mirror where the package actually spends time: the isotropic
path at kernel-density scale (many components, many points) and the
general path at mixture-identity scale (few components, many points).
Sizes scale with --scale so quick sanity runs stay quick.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from chaincert.kernels import get_impl
from chaincert.seeding import derived_rng


def _iso_case(name, n, k, d, want_entropy, seed):
    rng = derived_rng(seed, "bench-iso", name)
    means = rng.normal(size=(k, d))
    points = rng.normal(scale=1.5, size=(n, d))
    h = 0.1
    logcs = np.log(np.full(k, 1.0 / k)) - d * np.log(h) - 0.5 * d * np.log(2 * np.pi)
    args = (points, means, 1.0 / h**2, logcs, want_entropy)
    return name, "iso", args


def _general_case(name, n, k, d, want_entropy, seed):
    rng = derived_rng(seed, "bench-general", name)
    means = rng.normal(scale=2.0, size=(k, d))
    points = rng.normal(scale=2.0, size=(n, d))
    precs = np.empty((k, d, d))
    for j in range(k):
        a = rng.normal(size=(d, d))
        precs[j] = np.linalg.inv(a @ a.T + 0.5 * np.eye(d))
    logdets = np.array([np.linalg.slogdet(p)[1] for p in precs])
    logcs = np.log(np.full(k, 1.0 / k)) + 0.5 * logdets - 0.5 * d * np.log(2 * np.pi)
    args = (points, means, precs, logcs, want_entropy)
    return name, "general", args


def default_cases(scale: float, seed: int):
    n = lambda base: max(100, int(base * scale))
    k = lambda base: max(2, int(base * scale))
    return [
        _iso_case("iso d=1 kde logpdf", n(50_000), k(5_000), 1, False, seed),
        _iso_case("iso d=2 kde fused", n(20_000), k(2_000), 2, True, seed),
        _general_case("general d=2 k=5 logpdf", n(100_000), 5, 2, False, seed),
        _general_case("general d=3 k=8 fused", n(50_000), 8, 3, True, seed),
    ]


def time_call(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(scale: float, repeats: int, seed: int, tol: float):
    backends = {"numpy": get_impl("numpy")}
    try:
        backends["numba"] = get_impl("numba")
    except ImportError:
        print("numba not importable; timing numpy only", file=sys.stderr)

    results = []
    parity_ok = True
    for name, kind, args in default_cases(scale, seed):
        row = {"case": name, "kind": kind, "n": args[0].shape[0],
               "k": args[1].shape[0], "d": args[0].shape[1]}
        outputs = {}
        for backend, (general, iso) in backends.items():
            fn = iso if kind == "iso" else general
            fn(*args)  # warmup: JIT compile / page in
            row[backend + "_s"] = time_call(fn, args, repeats)
            outputs[backend] = fn(*args)
        if len(outputs) == 2:
            row["speedup"] = row["numpy_s"] / row["numba_s"]
            gap = 0.0
            for a, b in zip(outputs["numpy"], outputs["numba"]):
                if a is not None:
                    gap = max(gap, float(np.abs(a - b).max()))
            row["max_abs_gap"] = gap
            if gap > tol:
                parity_ok = False
        results.append(row)
    return results, parity_ok


def print_table(results) -> None:
    header = f"{'case':<28} {'n':>8} {'k':>6} {'d':>2} {'numpy':>9} {'numba':>9} {'speedup':>8} {'gap':>9}"
    print(header)
    print("-" * len(header))
    for row in results:
        numba_s = row.get("numba_s")
        print(
            f"{row['case']:<28} {row['n']:>8} {row['k']:>6} {row['d']:>2} "
            f"{row['numpy_s']:>8.3f}s "
            + (f"{numba_s:>8.3f}s {row['speedup']:>7.2f}x {row['max_abs_gap']:>9.1e}"
               if numba_s is not None else f"{'-':>9} {'-':>8} {'-':>9}")
        )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiplier on workload sizes (default 1.0)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats, best is kept (default 3)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="max allowed |numpy - numba| on any output")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable results instead of a table")
    args = parser.parse_args(argv)
    if args.scale <= 0 or args.repeats < 1:
        parser.error("--scale must be positive and --repeats at least 1")

    results, parity_ok = run(args.scale, args.repeats, args.seed, args.tol)
    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
    else:
        print_table(results)
    if not parity_ok:
        print("backend outputs disagree beyond tolerance", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
