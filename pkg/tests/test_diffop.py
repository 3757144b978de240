import pytest

from haarint.algebra import CoordLayout, Polynomial, rational
from haarint.diffop import (
    DiffOp,
    MulOp,
    VectorField,
    check_commutators,
    column_laplacian,
    commutator,
    gradient_matrix_invariants,
    invariant_ops,
    newton_invariants,
    op_eval_at_zero,
    pairing_poly,
)
from haarint.pizzetti import StiefelSpec


def norm_power(layout, col, s):
    u2 = pairing_poly(layout, col, col)
    return u2**s


@pytest.mark.parametrize("beta,n,s", [(1, 3, 2), (2, 2, 3), (4, 2, 2), (1, 5, 1)])
def test_laplacian_of_radial_power(beta, n, s):
    # Lap |u|^(2s) = 2s (2s + d - 2) |u|^(2s-2)
    lay = CoordLayout(beta, n, 2)
    d = beta * n
    got = column_laplacian(lay, 0)(norm_power(lay, 0, s))
    assert got == norm_power(lay, 0, s - 1).scale(2 * s * (2 * s + d - 2))


def test_partial_and_operator_algebra():
    lay = CoordLayout(1, 2, 1)
    x0, x1 = Polynomial.var(lay, 0), Polynomial.var(lay, 1)
    d0, d1 = DiffOp.partial(lay, 0), DiffOp.partial(lay, 1)
    f = x0**2 * x1
    assert (d0 * d1)(f) == x0.scale(2)
    assert (d0 + d1)(f) == (x0 * x1).scale(2) + x0**2
    assert (d0**3)(f).is_zero()
    assert op_eval_at_zero(d0 * d0 * d1, f) == 2


def test_second_invariant_on_quartics():
    spec = StiefelSpec(1, 3, 2)
    lay = spec.layout
    u = [Polynomial.var(lay, lay.index(0, 0, r)) for r in range(3)]
    v = [Polynomial.var(lay, lay.index(1, 0, r)) for r in range(3)]
    _, b = invariant_ops(spec)
    # Gram determinant: det [[Lap_u, <du,dv>], [<du,dv>, Lap_v]]
    assert op_eval_at_zero(b, u[0] ** 2 * v[1] ** 2) == 4
    assert op_eval_at_zero(b, u[0] * u[1] * v[0] * v[1]) == -2
    assert op_eval_at_zero(b, u[0] ** 2 * v[0] ** 2) == 0  # 4 - 4


@pytest.mark.parametrize("beta,n", [(2, 2), (2, 3), (4, 2)])
def test_newton_identities_reproduce_invariants(beta, n):
    spec = StiefelSpec(beta, n, 2)
    a, b = invariant_ops(spec)
    sums = gradient_matrix_invariants(spec, 2)
    assert sums[0] == a
    i1, i2 = newton_invariants(sums)
    assert i1 == a and i2 == b


def test_gradient_invariants_reject_real_case():
    with pytest.raises(ValueError):
        gradient_matrix_invariants(StiefelSpec(1, 3, 2), 2)


@pytest.mark.parametrize("beta,n", [(1, 3), (1, 4), (2, 3), (4, 2)])
def test_two_vector_commutators(beta, n):
    report = check_commutators(CoordLayout(beta, n, 2), trials=5, seed=beta * 10 + n)
    assert report.passed, report.as_dict()
    assert report.checked == 40


def test_commutator_check_detects_wrong_constant():
    lay = CoordLayout(1, 3, 2)
    d = lay.column_size
    lhs = commutator(column_laplacian(lay, 0), MulOp(pairing_poly(lay, 0, 0)))
    wrong = VectorField(lay, [(4, a, a) for a in lay.column(0)], 2 * d + 1)
    f = Polynomial.var(lay, 0) ** 2 + Polynomial.const(lay, rational(1) / 3)
    assert lhs(f) != wrong(f)


def test_invariant_ops_need_two_columns():
    with pytest.raises(ValueError):
        invariant_ops(StiefelSpec(1, 3, 3))
