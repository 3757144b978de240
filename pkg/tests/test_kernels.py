import math

import mpmath
import numpy as np
import pytest

from haarint.algebra import rational
from haarint.haar import mc_integrate
from haarint.kernels import (
    beta4_constant,
    bessel_psi,
    codim2_beta4_series,
    diagonal_coordinates,
    kernel_moment_check,
    kernel_taylor_beta2,
    moment_taylor,
    pfaffian,
    printed_beta4_constant,
    psi_coefficients,
    psi_hat,
    psi_hat_beta2,
    psi_hat_beta2_trace,
    psi_hat_beta4,
    psi_tilde4_pair,
    psi_tilde4_series,
)
from haarint.pizzetti import StiefelSpec

mpmath.mp.dps = 40


def mp_psi(nu, x):
    return mpmath.gamma(nu + 1) * mpmath.besselj(nu, x) / (mpmath.mpf(x) / 2) ** nu


def mp_envelope(nu, x):
    # |Psi| scale that stays positive through the zeros of J
    return max(1.0, float(abs(mpmath.gamma(nu + 1) * mpmath.hankel1(nu, x) / (mpmath.mpf(x) / 2) ** nu)))


@pytest.mark.parametrize("nu", [0, 0.5, 1, 2, 3.5, 5, 9, 20])
def test_bessel_psi_against_mpmath(nu):
    for x in np.linspace(0.01, 50, 300):
        ref = float(mp_psi(nu, x))
        got = bessel_psi(nu, x)
        assert abs(got - ref) <= 1e-12 * min(mp_envelope(nu, x), max(abs(ref), 1e-3) * 1e3)


def test_bessel_psi_relative_accuracy_away_from_zeros():
    for nu in (0, 1.5, 4):
        for x in (0.3, 2.0, 7.5, 18.0, 33.0):
            ref = float(mp_psi(nu, x))
            assert abs(bessel_psi(nu, x) - ref) <= 1e-12 * abs(ref) * 10


def test_bessel_psi_basics():
    assert bessel_psi(3, 0.0) == 1.0
    assert bessel_psi(0.5, 1.0) == pytest.approx(math.sin(1.0), rel=1e-15)
    with pytest.raises(ValueError):
        bessel_psi(-1, 1.0)


def test_psi_coefficients_sum_to_value():
    coeffs = psi_coefficients(2, 20)
    x = 0.7
    assert math.fsum(float(c) * (x * x) ** j for j, c in enumerate(coeffs)) == pytest.approx(bessel_psi(2, x), rel=1e-15)


def test_pfaffian_small_cases():
    assert pfaffian([[0, 3], [-3, 0]]) == 3
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 4))
    a = a - a.T
    explicit = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
    assert pfaffian(a) == pytest.approx(explicit, rel=1e-13)


@pytest.mark.parametrize("n", [2, 6, 10])
def test_pfaffian_identities(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n))
    a = a - a.T
    b = rng.normal(size=(n, n))
    pf = pfaffian(a)
    assert pf * pf == pytest.approx(np.linalg.det(a), rel=1e-10)
    assert pfaffian(b @ a @ b.T) == pytest.approx(np.linalg.det(b) * pf, rel=1e-9)


def test_pfaffian_rejects_bad_input():
    with pytest.raises(ValueError):
        pfaffian(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        pfaffian([[0, 1], [1, 0]])


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_pair_series_equals_codim2_series(m):
    assert dict(psi_tilde4_series(m, 8)) == codim2_beta4_series(m, 8)


def test_pair_function_routes_agree():
    for m in (0, 1):
        for a, b in [(2.5, 3.3), (2.1, 4.0), (3.0, 6.5)]:
            ser = dict(psi_tilde4_series(m, 60))
            ref = math.fsum(float(c) * (a * a) ** i * (b * b) ** j for (i, j), c in ser.items())
            assert psi_tilde4_pair(m, a, b) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_pair_function_limits_and_errors():
    assert psi_tilde4_pair(0, 1e-3, 2e-3) == pytest.approx(1.0, abs=1e-6)
    assert psi_tilde4_pair(1, 0.4, 0.9) == pytest.approx(psi_tilde4_pair(1, 0.9, 0.4), rel=1e-15)
    with pytest.raises(ValueError):
        psi_tilde4_pair(0, 8.0, 8.0000001)
    with pytest.raises(ValueError):
        psi_tilde4_pair(0, 1.0, 1.0)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_k1_collapse(n):
    for lam in (0.2, 1.0, 4.5, 9.9):
        assert psi_hat_beta2(n, n - 1, [lam]).value == pytest.approx(bessel_psi(n - 1, lam), rel=1e-12)
        assert psi_hat_beta4(n, n - 1, [lam]).value == pytest.approx(bessel_psi(2 * n - 1, lam), rel=1e-12)


@pytest.mark.parametrize("n,m", [(2, 0), (3, 0), (4, 1), (5, 2), (4, 0)])
def test_beta2_constant_needs_no_pinning(n, m):
    taylor = dict(kernel_taylor_beta2(n, m, 0))
    assert taylor[(0,) * (n - m)] == 1


@pytest.mark.parametrize("n,m,lam", [(2, 0, (1.2, 2.3)), (3, 0, (1.1, 1.9, 2.8)), (5, 2, (1.5, 2.5, 3.5))])
def test_beta2_determinant_forms_agree(n, m, lam):
    a = psi_hat_beta2(n, m, lam).value
    assert psi_hat_beta2_trace(n, m, lam).value == pytest.approx(a, rel=1e-9)


def test_kernels_near_origin():
    assert psi_hat_beta2(4, 1, (1e-5, 2e-5, 3e-5)).value == pytest.approx(1.0, abs=1e-8)
    assert psi_hat_beta4(4, 0, (1e-3, 2e-3, 3e-3, 4e-3)).value == pytest.approx(1.0, abs=1e-6)
    assert psi_hat_beta4(3, 0, (1e-3, 2e-3, 3e-3)).value == pytest.approx(1.0, abs=1e-6)
    # quadratic term: E<b,a>^2 / 2 = |Lambda|^2 / (2 beta n)
    lam = (1e-3, 2e-3, 3e-3)
    want = 1 - sum(v * v for v in lam) / (2 * 2 * 4)
    assert psi_hat_beta2(4, 1, lam).value == pytest.approx(want, abs=1e-12)


def test_kernels_symmetric_in_singular_values():
    assert psi_hat_beta2(4, 1, (1.3, 2.0, 3.1)).value == pytest.approx(psi_hat_beta2(4, 1, (3.1, 1.3, 2.0)).value, rel=1e-10)
    assert psi_hat_beta4(4, 1, (1.3, 2.0, 3.1)).value == pytest.approx(psi_hat_beta4(4, 1, (2.0, 3.1, 1.3)).value, rel=1e-10)


def test_degenerate_and_invalid_singular_values():
    with pytest.raises(ValueError):
        psi_hat_beta2(3, 1, (1.0, 1.0))
    with pytest.raises(ValueError):
        psi_hat_beta4(3, 1, (1.0, -2.0))
    with pytest.raises(ValueError):
        psi_hat_beta2(3, 1, (1.0,))


def test_beta4_constant_differs_from_printed_prefactor():
    # the Pfaffian formula is pinned by its value 1 at the origin
    assert beta4_constant(2, 0) == 1
    assert beta4_constant(3, 0) == rational(15) / 2
    assert printed_beta4_constant(2, 0) == pytest.approx(1 / 256)
    assert printed_beta4_constant(3, 0) == pytest.approx(1.5)


def cos_pairing(spec, lam):
    idx = diagonal_coordinates(spec)

    def f(x):
        return np.cos(x[:, idx] @ np.asarray(lam))

    return f


@pytest.mark.parametrize(
    "beta,n,k,lam",
    [(2, 3, 2, (1.5, 2.5)), (2, 4, 3, (1.2, 2.2, 3.0)), (4, 3, 2, (1.5, 2.5)), (4, 3, 3, (1.2, 2.0, 2.9)), (4, 4, 4, (1.1, 1.8, 2.6, 3.3))],
)
def test_closed_form_against_monte_carlo(beta, n, k, lam):
    spec = StiefelSpec(beta, n, k)
    kv = psi_hat(spec, lam)
    assert kv.route == "closed"
    est = mc_integrate(spec, cos_pairing(spec, lam), 200000, 17)
    assert abs(est.mean - kv.value) <= 4 * est.stderr


def test_taylor_coefficients_equal_moments():
    spec = StiefelSpec(2, 3, 3)
    assert moment_taylor(spec, 3) == dict(kernel_taylor_beta2(3, 0, 3))


def test_kernel_moment_check_reports_degrees():
    res = kernel_moment_check(StiefelSpec(4, 3, 2), (0.6, 1.0), 6)
    assert res.passed
    assert [r.degree for r in res.rows] == [0, 2, 4, 6]
    assert all(r.exact_match for r in res.rows)
    assert res.as_dict()["degrees"][1]["ratio"] == "1"
    with pytest.raises(ValueError):
        kernel_moment_check(StiefelSpec(1, 3, 2), (0.6, 1.0), 6)
    with pytest.raises(ValueError):
        kernel_moment_check(StiefelSpec(2, 3, 2), (0.6, 1.0), 7)
