"""Eigenvalues, norming constants and Weyl-function residues for the free and step-s problems."""

import math

from quasispec import eigenvalues, preset, residue


def main():
    for name in ("free", "step_s"):
        c = preset(name)
        spec = eigenvalues(c, window=(-5, 60))
        print(f"{name}: Dirichlet eigenvalues in [-5, 60)")
        print(f"{'n':>3} {'lambda_n':>20} {'mu_n = 1/norm':>20} {'residue of m':>20}")
        for n, lam, norm in zip(spec.indices, spec.eigenvalues, spec.norming):
            print(f"{n:3d} {lam:20.12f} {1 / norm:20.12f} {residue(c, lam):20.12f}")
        print()
    print(f"free-problem atoms should equal 2 n^2 / pi: first one is {2 / math.pi:.12f}")


if __name__ == "__main__":
    main()
