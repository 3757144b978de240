"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed at the end of the
pytest run and also when this file is executed directly.
"""

import math
import random
import time
from itertools import combinations_with_replacement

import mpmath
import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from haarint.algebra import CoordLayout, Polynomial
from haarint.clifford import build_general_jset
from haarint.diffop import check_commutators
from haarint.haar import (
    block_rng,
    low_dim_quadrature,
    mc_integrate_many,
    orthonormality_residual,
    quaternion_structure_residual,
    sample_stiefel_batch,
    sphere_monomial_moment,
)
from haarint.iz import iz_monte_carlo, iz_series, sekiguchi_operators, det_power, d1_eigen_coefficient
from haarint.kernels import kernel_moment_check, psi_hat_beta2, psi_hat_beta4
from haarint.pizzetti import (
    StiefelSpec,
    clifford_functional,
    clifford_lemma_check,
    clifford_u2_check,
    codim2_integrate,
    engines_for,
    integrate,
    prop43_check,
    random_spec_polynomial,
    recursion_integrate,
    so2_integrate,
    sphere_integrate,
    to_clifford_layout,
)


def record(number, title, passed, detail, started):
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] criterion {number:>2}: {title} ({detail}; {time.perf_counter() - started:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_criterion_01_sphere_exactness():
    t0 = time.perf_counter()
    count = bad = 0
    for N in range(2, 9):
        lay = CoordLayout(1, N, 1)
        for d in range(9):
            for combo in combinations_with_replacement(range(N), d):
                exps = [0] * N
                for i in combo:
                    exps[i] += 1
                f = Polynomial.monomial(lay, {i: e for i, e in enumerate(exps) if e})
                count += 1
                bad += sphere_integrate(N, f) != sphere_monomial_moment(N, exps)
    elapsed = time.perf_counter() - t0
    record(1, "sphere exactness", bad == 0 and elapsed < 10, f"{count} monomials, {bad} mismatches", t0)


def test_criterion_02_cross_engine_exactness():
    t0 = time.perf_counter()
    count = bad = 0
    for beta in (1, 2, 4):
        for n in range(2, 6):
            spec = StiefelSpec(beta, n, 2)
            rng = random.Random(1000 * beta + n)
            for _ in range(50):
                f = random_spec_polynomial(spec, 6, rng)
                a = recursion_integrate(spec, f)
                b = codim2_integrate(spec, f)
                js = build_general_jset(beta, beta * n)
                c = clifford_functional(beta, n, js, to_clifford_layout(f))
                count += 1
                bad += not (a == b == c)
    elapsed = time.perf_counter() - t0
    record(2, "recursion = codim2 = clifford", bad == 0 and elapsed < 120, f"{count} polynomials, {bad} mismatches", t0)


# every pairing is still visited: each trial takes the next three from a cyclic list
PAIRINGS_PER_TRIAL = 3


def test_criterion_03_invariances():
    t0 = time.perf_counter()
    checked = 0
    failures = []
    skipped = []
    for beta in (1, 2, 4):
        for n in range(1, 6):
            for k in range(1, min(3, n) + 1):
                spec = StiefelSpec(beta, n, k)
                if not engines_for(spec):
                    skipped.append((beta, n, k))
                    continue
                rep = prop43_check(spec, 50, 97 * beta + 11 * n + k, degree=4, pairings_per_trial=PAIRINGS_PER_TRIAL)
                checked += rep.checked
                if not rep.passed:
                    failures.append(((beta, n, k), rep.failure))
    elapsed = time.perf_counter() - t0
    detail = f"{checked} identities, failures {failures or 'none'}, no engine for {skipped}"
    record(3, "unit-norm and orthogonality invariances", not failures and elapsed < 120, detail, t0)


def test_criterion_04_commutators():
    t0 = time.perf_counter()
    failures = []
    checked = 0
    for kappa, m in [(1, 4), (2, 3), (4, 2)]:
        reports = [
            check_commutators(CoordLayout(kappa, m, 2), 30, 5 * kappa + m, degree=5),
            clifford_lemma_check(kappa, m, 30, 7 * kappa + m, l_max=3, p_max=3, degree=5),
            clifford_u2_check(kappa, m, 30, 3 * kappa + m, degree=5),
        ]
        for rep in reports:
            checked += rep.checked
            if not rep.passed:
                failures.append(((kappa, m), rep.failure))
    elapsed = time.perf_counter() - t0
    record(4, "two-vector and Clifford commutators", not failures and elapsed < 60, f"{checked} identities, failures {failures or 'none'}", t0)


def mc_agrees(exact, est):
    # absolute floor: a constant integrand has a round-off standard error
    return abs(exact - est.mean) <= 4 * est.stderr + 1e-12 * (1 + abs(exact))


def test_criterion_05_monte_carlo_concordance():
    t0 = time.perf_counter()
    total = fails = 0
    for beta in (1, 2, 4):
        for n in (3, 4):
            for k in (1, 2, 3):
                spec = StiefelSpec(beta, n, k)
                if not engines_for(spec):
                    continue
                rng = random.Random(31 * beta + 7 * n + k)
                fs = [random_spec_polynomial(spec, 4, rng) for _ in range(20)]
                exact = [float(integrate(spec, f)) for f in fs]
                ests = mc_integrate_many(spec, fs, 100000, 1000 * beta + 10 * n + k)
                for e, est in zip(exact, ests):
                    total += 1
                    fails += not mc_agrees(e, est)
    rate = fails / total
    elapsed = time.perf_counter() - t0
    record(5, "Monte Carlo concordance", rate <= 0.01 and elapsed < 180, f"{fails}/{total} outside 4 sigma", t0)


def test_criterion_06_so2_special_case():
    t0 = time.perf_counter()
    spec = StiefelSpec(1, 2, 2)
    rng = random.Random(6)
    worst = 0.0
    for _ in range(30):
        f = random_spec_polynomial(spec, 6, rng)
        worst = max(worst, abs(float(so2_integrate(f)) - low_dim_quadrature(spec, f)))
    elapsed = time.perf_counter() - t0
    record(6, "SO(2) factor against quadrature", worst <= 1e-10 and elapsed < 10, f"max deviation {worst:.2e}", t0)


def test_criterion_07_kernel_k1_collapse():
    t0 = time.perf_counter()
    mpmath.mp.dps = 30
    worst_mp = 0.0
    grid = np.linspace(0.05, 10.0, 200)
    for n in range(2, 7):
        for lam in grid:
            b2 = psi_hat_beta2(n, n - 1, [lam]).value
            b4 = psi_hat_beta4(n, n - 1, [lam]).value
            for nu, v in ((n - 1, b2), (2 * n - 1, b4)):
                ref = float(mpmath.gamma(nu + 1) * mpmath.besselj(nu, lam) / (mpmath.mpf(lam) / 2) ** nu)
                worst_mp = max(worst_mp, abs(v - ref))
    elapsed = time.perf_counter() - t0
    ok = worst_mp <= 1e-12 and elapsed < 1
    record(7, "kernel k=1 collapse to Psi", ok, f"max |kernel - Psi| vs 30-digit Bessel {worst_mp:.1e}", t0)


def test_criterion_08_kernel_against_moments():
    t0 = time.perf_counter()
    cases = [((2, 2, 2), (0.45, 0.8)), ((2, 3, 2), (0.5, 0.75)), ((2, 4, 2), (0.35, 0.9)), ((4, 3, 2), (0.6, 0.7))]
    notes = []
    ok = True
    for (beta, n, k), lam in cases:
        spec = StiefelSpec(beta, n, k)
        assert math.hypot(*lam) <= 1
        res = kernel_moment_check(spec, lam, 8)
        closed = psi_hat_beta2(n, n - k, lam, "closed") if beta == 2 else psi_hat_beta4(n, n - k, lam, "closed")
        closed_ok = abs(res.series_value - closed.value) <= res.tail_bound
        ok &= res.passed and closed_ok
        mism = res.mismatched_degrees
        notes.append(f"({beta},{n},{n - k}) gap {abs(res.series_value - res.kernel_value):.1e} <= {res.tail_bound:.1e}, coefficient mismatches {mism or 'none'}")
    elapsed = time.perf_counter() - t0
    record(8, "kernel formulas against exact moments", ok and elapsed < 300, "; ".join(notes), t0)


def test_criterion_09_itzykson_zuber():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    Hs = [tuple(rng.uniform(-0.5, 0.5, 4)) for _ in range(5)]
    mc = [iz_monte_carlo(H, 1_000_000, 900 + i) for i, H in enumerate(Hs)]
    verdicts = {}
    for conv in ("paper", "from_zero"):
        ok = iz_series([0.0] * 4, sum_convention=conv).value == 1.0
        for c in (0.1, 0.5, 1.0):
            ok &= abs(iz_series([c] * 4, sum_convention=conv).value - math.exp(-4 * c)) <= 1e-8
        for H, est in zip(Hs, mc):
            ok &= abs(iz_series(H, sum_convention=conv).value - est.mean) <= 4 * est.stderr
        verdicts[conv] = ok
    printed = {conv: iz_series([0.5] * 4, 40, conv, "printed").value for conv in ("paper", "from_zero")}
    passing = [c for c, v in verdicts.items() if v]
    elapsed = time.perf_counter() - t0
    detail = f"passing convention {passing or 'none'}; printed prefactor at H=0.5*Id gives {printed}"
    record(9, "Itzykson-Zuber series", bool(passing) and elapsed < 600, detail, t0)


def test_criterion_10_sekiguchi():
    t0 = time.perf_counter()
    got = []
    ok = True
    for a in range(1, 5):
        d1 = sekiguchi_operators(det_power(a))["D1"]
        want = d1_eigen_coefficient(a)
        ok &= d1 == det_power(a - 1).scale(want)
        got.append(str(want))
    elapsed = time.perf_counter() - t0
    record(10, "Sekiguchi eigen-relation", ok and elapsed < 10, f"coefficients {', '.join(got)}", t0)


SAMPLER_SPECS = [(b, n, k) for b in (1, 2, 4) for n in (2, 3, 4) for k in range(1, n + 1)]


def test_criterion_11_sampler_quality():
    t0 = time.perf_counter()
    worst_orth = worst_struct = 0.0
    moments = outliers = 0
    for beta, n, k in SAMPLER_SPECS:
        spec = StiefelSpec(beta, n, k)
        x = sample_stiefel_batch(spec, block_rng(11, beta * 100 + n * 10 + k), 10000)
        worst_orth = max(worst_orth, float(np.max(orthonormality_residual(spec, x))))
        if beta == 4:
            worst_struct = max(worst_struct, float(np.max(quaternion_structure_residual(spec, x))))
        # second moments: E[x_a x_b] = delta_ab / (beta n)
        prod = np.einsum("si,sj->sij", x, x)
        mean = prod.mean(axis=0)
        err = prod.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
        want = np.eye(x.shape[1]) / (beta * n)
        iu = np.triu_indices(x.shape[1])
        dev = np.abs(mean - want)[iu]
        tol = 4 * err[iu] + 1e-12
        moments += dev.size
        outliers += int(np.sum(dev > tol))
    elapsed = time.perf_counter() - t0
    ok = worst_orth < 1e-12 and worst_struct < 1e-12 and outliers <= 0.001 * moments and elapsed < 60
    detail = f"residuals {worst_orth:.1e}/{worst_struct:.1e}, {outliers}/{moments} second moments beyond 4 sigma"
    record(11, "sampler quality", ok, detail, t0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
