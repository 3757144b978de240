"""Fourier kernel near the origin and the Itzykson-Zuber series.

Run: python3 demos/kernel_and_iz.py
"""

import math

from haarint import StiefelSpec
from haarint.iz import iz_monte_carlo, iz_series
from haarint.kernels import kernel_moment_check, psi_hat


def main():
    for beta, n, k in [(2, 3, 2), (4, 3, 2)]:
        spec = StiefelSpec(beta, n, k)
        lam = (0.5, 0.75)
        res = kernel_moment_check(spec, lam, 8)
        print(f"beta={beta} n={n} k={k} lambdas={lam}")
        print(f"  closed form {psi_hat(spec, lam, route='closed').value:.12f}")
        print(f"  moment series {res.series_value:.12f} (tail bound {res.tail_bound:.1e})")

    for c in (0.1, 0.5, 1.0):
        print(f"IZ at {c}*Id: {iz_series([c] * 4).value:.12f} vs exp(-4c) {math.exp(-4 * c):.12f}")
    H = (0.3, 0.1, -0.2, -0.1)
    est = iz_monte_carlo(H, 200000, seed=3)
    print(f"IZ at H={H}: series {iz_series(H).value:.6f}, Monte Carlo {est.mean:.6f} +- {est.stderr:.6f}")


if __name__ == "__main__":
    main()
