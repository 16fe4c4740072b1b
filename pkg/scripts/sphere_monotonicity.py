"""Frequency traces of random zonal heat solutions on the shrinking sphere.

Writes one CSV per solution and prints the range of kappa, the correction
factor and the frequency, plus the smallest forward difference of U.
"""

import argparse
from pathlib import Path

import numpy as np

from parafreq.backgrounds import shrinking_sphere
from parafreq.cli import emit_trace
from parafreq.frequency import check_monotone, trace
from parafreq.randomize import random_solution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--modes", type=int, default=8)
    ap.add_argument("--c0", type=float, default=4.0)
    ap.add_argument("--window", type=float, nargs=2, default=(-1.0, 0.5))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="out/sphere")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bg = shrinking_sphere(c0=args.c0, t1=1.0, eps=1e-3 * (1.0 - args.window[0]))
    rng = np.random.default_rng(args.seed)
    print(f"{'run':>3} {'kappa max':>10} {'Ecorr(b)':>10} {'U(a)':>10} {'U(b)':>10} {'min dU':>10}")
    for i in range(args.count):
        sol = random_solution(bg, rng, tuple(args.window), modes=args.modes, normalize=True)
        tr = trace(sol, args.samples)
        rep = check_monotone(tr, raise_on_fail=False)
        emit_trace(tr, out / f"sphere_{i:02d}.csv")
        print(
            f"{i:3d} {tr.kappa.max():10.5f} {tr.Ecorr[-1]:10.5f} {tr.U[0]:10.5f} "
            f"{tr.U[-1]:10.5f} {np.diff(tr.U).min():10.2e}{'' if rep.passed else '  FAIL'}"
        )


if __name__ == "__main__":
    main()
