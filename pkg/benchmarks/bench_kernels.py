"""Compare the compiled and numpy kernel backends on Voiculescu bundles.

Usage::

    python benchmarks/bench_kernels.py --n 16,32 --grid 64 --threads 1,2
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from obstruction_lab import almost_rep as ar
from obstruction_lab import chern_lab as cl
from obstruction_lab import kernels
from obstruction_lab import torus_bundle as tb


def _time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(n: int, grid: int, backend: str, threads: int, repeat: int) -> dict:
    rep = ar.normalize(ar.voiculescu_pair(n))
    t_asm, field = _time(lambda: tb.assemble_bundle(rep, resolution=grid, threads=threads,
                                                    backend=backend), repeat)
    t_curv, curv = _time(lambda: cl.curvature(field, threads=threads, backend=backend), repeat)
    pairing = cl.integrate(cl.chern_character_form(curv, 1), (0, 1))
    return {"n": n, "grid": grid, "backend": backend, "threads": threads,
            "assemble_s": t_asm, "curvature_s": t_curv, "ch1": pairing,
            "curv_norm_2": cl.curvature_norm(curv, 2)}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="16,32")
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--threads", default="1")
    ap.add_argument("--repeat", type=int, default=1)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    rows = []
    print(f"{'n':>4} {'backend':>9} {'thr':>3} {'assemble':>9} {'curvature':>10} {'ch1':>10}")
    for n in (int(v) for v in args.n.split(",")):
        for threads in (int(v) for v in args.threads.split(",")):
            for backend in sorted(kernels.BACKENDS):
                r = bench(n, args.grid, backend, threads, args.repeat)
                rows.append(r)
                print(f"{n:>4} {backend:>9} {threads:>3} {r['assemble_s']:>8.2f}s "
                      f"{r['curvature_s']:>9.2f}s {r['ch1']:>10.6f}")
    by = {(r["n"], r["threads"], r["backend"]): r for r in rows}
    for (n, t, b), r in by.items():
        ref = by.get((n, t, "numpy"))
        if b != "numpy" and ref:
            speed = (ref["assemble_s"] + ref["curvature_s"]) / (r["assemble_s"] + r["curvature_s"])
            print(f"n={n} threads={t}: {b} speedup x{speed:.2f}, "
                  f"|ch1 diff| {abs(r['ch1'] - ref['ch1']):.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
