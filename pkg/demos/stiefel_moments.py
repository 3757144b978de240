"""Exact Haar moments on Stiefel manifolds, cross-checked by Monte Carlo.

Run: python3 demos/stiefel_moments.py
"""

import random

from haarint import StiefelSpec, integrate
from haarint.haar import mc_integrate
from haarint.pizzetti import engines_for, random_spec_polynomial


def main():
    for beta, n, k in [(1, 4, 2), (2, 3, 2), (4, 3, 2)]:
        spec = StiefelSpec(beta, n, k)
        f = random_spec_polynomial(spec, 4, random.Random(beta * 10 + n))
        exact = integrate(spec, f)
        est = mc_integrate(spec, f, 100000, seed=1)
        print(f"beta={beta} n={n} k={k} engines={engines_for(spec)}")
        print(f"  exact {exact}  ~ {float(exact):.6f}")
        print(f"  Monte Carlo {est.mean:.6f} +- {est.stderr:.6f}")


if __name__ == "__main__":
    main()
