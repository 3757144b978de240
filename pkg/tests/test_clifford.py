import numpy as np
import pytest

from haarint.clifford import build_general_jset, build_jset, make_jset, verify_jset


@pytest.mark.parametrize("beta,n", [(1, 1), (1, 4), (2, 1), (2, 3), (4, 1), (4, 3)])
def test_stiefel_jsets_satisfy_relations(beta, n):
    js = build_jset(beta, n)
    assert js.kappa == beta
    assert js.d == beta * n
    assert verify_jset(js)
    assert js.rows  # signed permutations


def test_quaternion_generators_match_printed_blocks():
    js = build_jset(4, 1)
    j1 = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]])
    j2 = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]])
    assert np.array_equal(js.mats[1], j1)
    assert np.array_equal(js.mats[2], j2)
    assert np.array_equal(js.mats[3], j1 @ j2)


@pytest.mark.parametrize("kappa,d", [(1, 3), (2, 4), (3, 4), (3, 8), (4, 8)])
def test_general_jsets(kappa, d):
    js = build_general_jset(kappa, d)
    assert js.kappa == kappa and verify_jset(js)


def test_general_jset_rejects_bad_size():
    with pytest.raises(ValueError):
        build_general_jset(4, 6)
    with pytest.raises(ValueError):
        build_general_jset(5, 8)


def test_apply_matches_dense_product():
    js = build_jset(4, 2)
    vec = np.arange(8.0)
    for l in range(4):
        assert np.array_equal(js.apply(l, vec), js.mats[l] @ vec)


def test_verify_rejects_broken_set():
    bad = make_jset([np.eye(2), np.array([[0, 1], [1, 0]])])  # symmetric, not antisymmetric
    assert not verify_jset(bad)
