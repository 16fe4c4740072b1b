"""Galerkin eigenvalues of the Ornstein-Uhlenbeck operator against -j/(2 tau).

Compares the orthonormal Hermite basis with the raw monomial basis, whose
mass matrix becomes ill-conditioned as the degree grows.
"""

import argparse

import numpy as np

from parafreq.errors import IllConditioned
from parafreq.ouspec import galerkin_matrices, galerkin_spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taus", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--n-max", type=int, default=20)
    args = ap.parse_args()

    print(f"{'tau':>5} {'N':>3} {'hermite err':>12} {'monomial err':>13} {'cond(M) mono':>13}")
    for tau in args.taus:
        for N in range(2, args.n_max + 1, 2):
            exact = -np.arange(N + 1) / (2 * tau)
            err_h = np.max(np.abs(galerkin_spectrum(tau, N) - exact))
            cond = np.linalg.cond(galerkin_matrices(tau, N, "monomial")[1])
            try:
                err_m = f"{np.max(np.abs(galerkin_spectrum(tau, N, 'monomial') - exact)):13.2e}"
            except IllConditioned:
                err_m = f"{'ill-cond.':>13}"
            print(f"{tau:5.2f} {N:3d} {err_h:12.2e} {err_m} {cond:13.2e}")


if __name__ == "__main__":
    main()
