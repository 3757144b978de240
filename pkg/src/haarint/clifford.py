"""Signed-permutation matrix sets realizing real, complex and quaternion structure.

A J-set is ``J^(0) = 1, J^(1), ..., J^(kappa-1)`` with
``J^(i)^T J^(j) + J^(j)^T J^(i) = 2 delta_ij 1``.  Every matrix built here has
one nonzero entry (+1 or -1) per row, so it is also kept as a row map
``row -> (column, sign)`` for O(d) application.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# 4x4 quaternion units acting on the (Re P, Im P, Re Q, Im Q) component blocks.
_Q1 = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=np.int64)
_Q2 = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=np.int64)
_Q3 = _Q1 @ _Q2
_C1 = np.array([[0, 1], [-1, 0]], dtype=np.int64)

# Smallest faithful block size of the generators for each kappa.
_MIN_BLOCK = {1: 1, 2: 2, 3: 4, 4: 4}


@dataclass(frozen=True)
class JSet:
    """Dense integer matrices plus their signed-permutation rows (when they are such)."""

    d: int
    mats: tuple
    rows: tuple = field(default=(), compare=False, repr=False)

    @property
    def kappa(self) -> int:
        return len(self.mats)

    def entries(self, l: int) -> list[tuple[int, int, int]]:
        """Nonzero entries ``(a, b, J_ab)`` of ``J^(l)``."""
        if self.rows:
            return [(a, b, s) for a, (b, s) in enumerate(self.rows[l])]
        m = self.mats[l]
        return [(int(a), int(b), int(m[a, b])) for a, b in zip(*np.nonzero(m))]

    def apply(self, l: int, vec) -> np.ndarray:
        """``J^(l) @ vec`` along the first axis."""
        vec = np.asarray(vec)
        if not self.rows:
            return self.mats[l] @ vec
        cols = np.fromiter((b for b, _ in self.rows[l]), dtype=np.intp, count=self.d)
        signs = np.fromiter((s for _, s in self.rows[l]), dtype=np.int64, count=self.d)
        return signs.reshape((-1,) + (1,) * (vec.ndim - 1)) * vec[cols]


def _signed_rows(m: np.ndarray):
    rows = []
    for a in range(m.shape[0]):
        nz = np.nonzero(m[a])[0]
        if len(nz) != 1 or abs(int(m[a, nz[0]])) != 1:
            return None
        rows.append((int(nz[0]), int(m[a, nz[0]])))
    return tuple(rows)


def make_jset(mats) -> JSet:
    mats = [np.array(m, dtype=np.int64) for m in mats]
    if not mats:
        raise ValueError("a J-set needs at least the identity")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise ValueError("all J-matrices must be square of the same size")
        m.setflags(write=False)
    rows = [_signed_rows(m) for m in mats]
    return JSet(d=d, mats=tuple(mats), rows=tuple(rows) if all(r is not None for r in rows) else ())


def _blocks(kappa: int) -> list[np.ndarray]:
    if kappa == 1:
        return [np.eye(1, dtype=np.int64)]
    if kappa == 2:
        return [np.eye(2, dtype=np.int64), _C1]
    if kappa == 3:
        return [np.eye(4, dtype=np.int64), _Q1, _Q2]
    if kappa == 4:
        return [np.eye(4, dtype=np.int64), _Q1, _Q2, _Q3]
    raise ValueError(f"kappa must be in 1..4, got {kappa}")


def build_jset(beta: int, n: int) -> JSet:
    """J-set of U^(beta)(n) acting on columns stacked as (component, row) blocks."""
    if beta not in (1, 2, 4):
        raise ValueError(f"beta must be 1, 2 or 4, got {beta}")
    if n < 1:
        raise ValueError("n must be positive")
    eye = np.eye(n, dtype=np.int64)
    return make_jset([np.kron(b, eye) for b in _blocks(beta)])


def build_general_jset(kappa: int, d: int) -> JSet:
    """Identity plus kappa-1 anticommuting generators, each ``M kron 1_{d/s}``."""
    if kappa not in _MIN_BLOCK:
        raise ValueError(f"kappa must be in 1..4, got {kappa}")
    s = _MIN_BLOCK[kappa]
    if d < 1 or d % s:
        raise ValueError(f"d={d} is not a multiple of the block size {s} for kappa={kappa}")
    eye = np.eye(d // s, dtype=np.int64)
    return make_jset([np.kron(b, eye) for b in _blocks(kappa)])


def verify_jset(js: JSet) -> bool:
    """Exact integer check of identity, antisymmetry and the anticommutation relations."""
    mats = [np.asarray(m, dtype=np.int64) for m in js.mats]
    if not mats:
        return False
    d = js.d
    eye = np.eye(d, dtype=np.int64)
    if any(m.shape != (d, d) for m in mats):
        return False
    if not np.array_equal(mats[0], eye):
        return False
    for i, a in enumerate(mats):
        if i > 0 and not np.array_equal(a.T, -a):
            return False
        for j in range(i, len(mats)):
            b = mats[j]
            s = a.T @ b + b.T @ a
            if not np.array_equal(s, 2 * eye if i == j else 0 * eye):
                return False
    return True
