import random

import pytest

from haarint.algebra import CoordLayout, Polynomial, rational
from haarint.haar import sphere_monomial_moment
from haarint.pizzetti import (
    StiefelSpec,
    clifford_lemma_check,
    clifford_u2_check,
    codim2_integrate,
    engines_for,
    integrate,
    prop43_check,
    random_spec_polynomial,
    recursion_integrate,
    signed_permutation_check,
    so2_integrate,
    sphere_integrate,
    to_clifford_layout,
)

R = rational


def mono(spec, exps):
    return Polynomial.monomial(spec.layout, exps)


def test_sphere_low_moments():
    for N in range(2, 9):
        lay = CoordLayout(1, N, 1)
        x = [Polynomial.var(lay, i) for i in range(N)]
        assert sphere_integrate(N, Polynomial.const(lay, 1)) == 1
        assert sphere_integrate(N, x[0] ** 2) == R(1) / N
        assert sphere_integrate(N, x[0] ** 4) == R(3) / (N * (N + 2))
        assert sphere_integrate(N, x[0] ** 2 * x[1] ** 2) == R(1) / (N * (N + 2))
        assert sphere_integrate(N, x[0] ** 3 * x[1]) == 0


@pytest.mark.parametrize(
    "beta,n,k",
    [(1, 3, 2), (1, 4, 3), (2, 3, 2), (2, 3, 3), (2, 2, 2), (4, 2, 2), (4, 3, 3), (1, 5, 2)],
)
def test_first_row_matches_sphere_oracle(beta, n, k):
    # the first row of a Haar frame is the head of a uniform vector on S^(beta n - 1)
    spec = StiefelSpec(beta, n, k)
    lay = spec.layout
    row = [lay.index(c, l, 0) for c in range(k) for l in range(beta)]
    rng = random.Random(beta * 100 + n * 10 + k)
    for _ in range(4):
        exps = [2 * rng.randint(0, 1) for _ in row]
        exps[rng.randrange(len(row))] += 2
        want = sphere_monomial_moment(beta * n, exps + [0] * (beta * n - len(row)))
        f = mono(spec, {i: e for i, e in zip(row, exps) if e})
        for eng in engines_for(spec):
            assert integrate(spec, f, eng) == want, eng


@pytest.mark.parametrize("n", [3, 4, 5])
def test_weingarten_orthogonal(n):
    # E[U11^2 U22^2] = (n+1)/((n-1) n (n+2)) on O(n)
    spec = StiefelSpec(1, n, 2)
    lay = spec.layout
    f = mono(spec, {lay.index(0, 0, 0): 2, lay.index(1, 0, 1): 2})
    want = R(n + 1) / ((n - 1) * n * (n + 2))
    for eng in engines_for(spec):
        assert integrate(spec, f, eng) == want


@pytest.mark.parametrize("n", [2, 3, 4])
def test_weingarten_unitary(n):
    # E[|U11|^2 |U22|^2] = 1/(n^2 - 1) on U(n)
    spec = StiefelSpec(2, n, 2)
    lay = spec.layout

    def abs2(c, r):
        re = Polynomial.var(lay, lay.index(c, 0, r))
        im = Polynomial.var(lay, lay.index(c, 1, r))
        return re * re + im * im

    f = abs2(0, 0) * abs2(1, 1)
    for eng in engines_for(spec):
        assert integrate(spec, f, eng) == R(1) / (n * n - 1)


@pytest.mark.parametrize("beta,n", [(1, 3), (1, 4), (2, 3), (4, 2), (4, 3)])
def test_engines_agree_on_random_polynomials(beta, n):
    spec = StiefelSpec(beta, n, 2)
    rng = random.Random(beta + 7 * n)
    for _ in range(5):
        f = random_spec_polynomial(spec, 6, rng)
        a = codim2_integrate(spec, f)
        assert recursion_integrate(spec, f) == a
        assert integrate(spec, f, "clifford") == a


def test_to_clifford_layout_keeps_indices():
    spec = StiefelSpec(4, 2, 2)
    f = random_spec_polynomial(spec, 4, random.Random(3))
    g = to_clifford_layout(f)
    assert g.layout == CoordLayout(1, 8, 2)
    assert dict(g.terms) == dict(f.terms)


def test_so2_special_case():
    spec = StiefelSpec(1, 2, 2)
    lay = spec.layout
    u1, u2 = Polynomial.var(lay, lay.index(0, 0, 0)), Polynomial.var(lay, lay.index(0, 0, 1))
    v1, v2 = Polynomial.var(lay, lay.index(1, 0, 0)), Polynomial.var(lay, lay.index(1, 0, 1))
    assert so2_integrate(u1 * v2) == R(1) / 2
    assert so2_integrate(u1 * v1) == 0
    assert so2_integrate(Polynomial.const(lay, 1)) == 1
    # the determinant is 1 on SO(2) and averages to 0 over O(2)
    det = u1 * v2 - u2 * v1
    assert so2_integrate(det) == 1
    assert codim2_integrate(spec, det) == 0
    assert integrate(spec, det) == 1  # auto picks SO(2)


def test_recursion_three_columns():
    spec = StiefelSpec(1, 4, 3)
    lay = spec.layout
    assert recursion_integrate(spec, mono(spec, {lay.index(2, 0, 3): 2})) == R(1) / 4
    with pytest.raises(ValueError):
        recursion_integrate(StiefelSpec(1, 3, 3), mono(spec, {}).relabel(StiefelSpec(1, 3, 3).layout, {}))


def test_integrate_errors():
    spec = StiefelSpec(1, 3, 2)
    other = Polynomial.const(CoordLayout(1, 4, 2), 1)
    with pytest.raises(ValueError):
        integrate(spec, other)
    with pytest.raises(ValueError):
        integrate(spec, Polynomial.const(spec.layout, 1), "sphere")
    with pytest.raises(ValueError):
        integrate(spec, Polynomial.const(spec.layout, 1), "nope")


@pytest.mark.parametrize("beta,n,k", [(1, 3, 2), (2, 2, 2), (2, 3, 3), (4, 2, 2)])
def test_invariance_suites(beta, n, k):
    spec = StiefelSpec(beta, n, k)
    assert prop43_check(spec, 3, 1).passed
    assert signed_permutation_check(spec, 3, 1).passed


@pytest.mark.parametrize("kappa,m", [(1, 4), (2, 3), (3, 4), (4, 2)])
def test_clifford_lemmas(kappa, m):
    assert clifford_lemma_check(kappa, m, trials=2, seed=kappa).passed
    assert clifford_u2_check(kappa, m, trials=2, seed=kappa).passed
