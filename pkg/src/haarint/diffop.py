"""Constant-coefficient differential operators and the first-order fields around them.

A :class:`DiffOp` is a polynomial in the partials ``d_0, ..., d_{dim-1}``
stored as a :class:`Polynomial` on the same layout, so composition is
polynomial multiplication.  Multiplication operators, Euler operators and
fields like ``<u, J grad_v>`` have non-constant coefficients; they are plain
callables on polynomials (:class:`VectorField`, :class:`MulOp`).
"""

from __future__ import annotations

import random
from math import factorial
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    ZERO,
    CoordLayout,
    GaussRational,
    Monomial,
    Polynomial,
    mono_degree,
    random_polynomial,
    rational,
)
from .clifford import JSet, build_jset

Operator = Callable[[Polynomial], Polynomial]


class DiffOp:
    """Polynomial in the partial derivatives with Gaussian-rational coefficients."""

    __slots__ = ("poly", "_degrees")

    def __init__(self, poly: Polynomial):
        self.poly = poly
        self._degrees = tuple(sorted({mono_degree(m) for m in poly.terms}))

    @property
    def layout(self) -> CoordLayout:
        return self.poly.layout

    @classmethod
    def partial(cls, layout: CoordLayout, idx: int) -> "DiffOp":
        return cls(Polynomial.var(layout, idx))

    @classmethod
    def identity(cls, layout: CoordLayout) -> "DiffOp":
        return cls(Polynomial.const(layout, 1))

    @classmethod
    def zero(cls, layout: CoordLayout) -> "DiffOp":
        return cls(Polynomial.zero(layout))

    def degrees(self) -> tuple[int, ...]:
        return self._degrees

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp(self.poly + other.poly)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp(self.poly - other.poly)

    def __neg__(self) -> "DiffOp":
        return DiffOp(-self.poly)

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return DiffOp(self.poly * other.poly)
        return DiffOp(self.poly.scale(other))

    def __rmul__(self, other):
        return DiffOp(self.poly.scale(other))

    def __pow__(self, e: int) -> "DiffOp":
        return DiffOp(self.poly**e)

    def scale(self, c) -> "DiffOp":
        return DiffOp(self.poly.scale(c))

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.poly == other.poly

    def __hash__(self):
        return hash(self.poly)

    def __call__(self, f: Polynomial) -> Polynomial:
        return op_apply(self, f)

    def __repr__(self):
        return f"DiffOp({self.poly!r})"


@lru_cache(maxsize=1 << 18)
def _sub_monomials(m: Monomial, d: int) -> tuple:
    """All ``(sub, rest, falling)`` with ``sub <= m``, ``deg(sub) = d``, ``rest = m - sub``."""
    out = []
    items = m

    def rec(pos: int, left: int, sub: list, rest: list, factor: int):
        if left == 0:
            out.append((tuple(sub), tuple(rest) + items[pos:], factor))
            return
        if pos == len(items):
            return
        i, e = items[pos]
        for s in range(min(e, left), -1, -1):
            f = factor
            for t in range(s):
                f *= e - t
            if s:
                sub.append((i, s))
            if e - s:
                rest.append((i, e - s))
            rec(pos + 1, left - s, sub, rest, f)
            if e - s:
                rest.pop()
            if s:
                sub.pop()

    rec(0, d, [], [], 1)
    return tuple(out)


def op_apply(op: DiffOp, f: Polynomial) -> Polynomial:
    """Exact action of a constant-coefficient operator on a polynomial."""
    if op.layout != f.layout:
        raise ValueError(f"layout mismatch: {op.layout} vs {f.layout}")
    table = op.poly.terms
    if not table or f.is_zero():
        return Polynomial.zero(f.layout)
    degrees = op.degrees()
    if op.poly.is_real() and f.is_real():
        acc: dict = {}
        for m, c in f.terms.items():
            cm = c.re
            dm = mono_degree(m)
            for d in degrees:
                if d > dm:
                    break
                for sub, rest, fac in _sub_monomials(m, d):
                    oc = table.get(sub)
                    if oc is not None:
                        acc[rest] = acc.get(rest, ZERO) + cm * oc.re * fac
        return Polynomial.from_rational_dict(f.layout, acc)
    re: dict = {}
    im: dict = {}
    for m, c in f.terms.items():
        dm = mono_degree(m)
        for d in degrees:
            if d > dm:
                break
            for sub, rest, fac in _sub_monomials(m, d):
                oc = table.get(sub)
                if oc is not None:
                    re[rest] = re.get(rest, ZERO) + (c.re * oc.re - c.im * oc.im) * fac
                    im[rest] = im.get(rest, ZERO) + (c.re * oc.im + c.im * oc.re) * fac
    return Polynomial.from_rational_dict(f.layout, re, im)


def op_eval_at_zero(op: DiffOp, f: Polynomial) -> GaussRational:
    """``(op f)(0)``, which only sees monomials of f that appear in op."""
    out = GaussRational(0)
    for m, c in op.poly.terms.items():
        fc = f.terms.get(m)
        if fc is not None:
            w = 1
            for _, e in m:
                w *= factorial(e)
            out = out + c * fc * w
    return out


# ------------------------------------------------------------- constructors


def column_laplacian(layout: CoordLayout, c: int) -> DiffOp:
    """Laplacian in the real coordinates of column ``c``."""
    return DiffOp(Polynomial(layout, {((i, 2),): 1 for i in layout.column(c)}))


def pair_op(layout: CoordLayout, i: int, j: int, J) -> DiffOp:
    """``<grad_{u_i}, J grad_{u_j}> = sum_ab J_ab d_(i,a) d_(j,b)``."""
    J = _as_jmatrix(J)
    size = layout.column_size
    if J.shape != (size, size):
        raise ValueError(f"J has shape {J.shape}, column size is {size}")
    ci = layout.column(i)
    cj = layout.column(j)
    terms: dict = {}
    for a, b in zip(*np.nonzero(J)):
        x, y = ci[a], cj[b]
        m = ((x, 2),) if x == y else tuple(sorted(((x, 1), (y, 1))))
        terms[m] = terms.get(m, 0) + int(J[a, b])
    return DiffOp(Polynomial(layout, terms))


def _as_jmatrix(J) -> np.ndarray:
    return np.asarray(J, dtype=np.int64)


def _spec_layout(spec) -> CoordLayout:
    layout = getattr(spec, "layout", None)
    return layout if layout is not None else CoordLayout(spec.beta, spec.n, spec.k)


def invariant_ops(spec) -> tuple[DiffOp, DiffOp]:
    """``I1 = Lap_u + Lap_v`` and ``I2 = Lap_u Lap_v - sum_l <grad_u, J^(l) grad_v>^2`` for k = 2."""
    layout = _spec_layout(spec)
    if layout.k != 2:
        raise ValueError(f"invariant_ops needs k = 2, got k = {layout.k}")
    js = build_jset(layout.beta, layout.n)
    return clifford_ab(layout, js)


def clifford_ab(layout: CoordLayout, js: JSet) -> tuple[DiffOp, DiffOp]:
    """The pair (A, B) of a two-column layout for an arbitrary J-set."""
    lu = column_laplacian(layout, 0)
    lv = column_laplacian(layout, 1)
    b = lu * lv
    for m in js.mats:
        p = pair_op(layout, 0, 1, m)
        b = b - p * p
    return lu + lv, b


# ---------------------------------------------------- gradient-matrix traces

_I = GaussRational(0, 1)


def _gradient_entries(layout: CoordLayout):
    """Complex entries of the operator gradient, each a first-order DiffOp polynomial.

    beta=2: ``grad[r][c] = d_Re - i d_Im``.
    beta=4: the 2n x 2k block form ``[[dP, dQ], [-conj dQ, conj dP]]`` with
    ``dP = d_0 - i d_1`` and ``dQ = d_2 - i d_3`` on the four real components.
    """
    beta, n, k = layout.beta, layout.n, layout.k

    def d(c, l, r):
        return Polynomial.var(layout, layout.index(c, l, r))

    if beta == 2:
        return [[d(c, 0, r) - d(c, 1, r).scale(_I) for c in range(k)] for r in range(n)]
    if beta == 4:
        rows = []
        for r in range(n):
            dp = [d(c, 0, r) - d(c, 1, r).scale(_I) for c in range(k)]
            dq = [d(c, 2, r) - d(c, 3, r).scale(_I) for c in range(k)]
            rows.append(dp + dq)
        for r in range(n):
            dp = [d(c, 0, r) - d(c, 1, r).scale(_I) for c in range(k)]
            dq = [d(c, 2, r) - d(c, 3, r).scale(_I) for c in range(k)]
            rows.append([-q.conjugate() for q in dq] + [p.conjugate() for p in dp])
        return rows
    raise ValueError("gradient matrix invariants need beta in {2, 4}")


def gradient_gram(layout: CoordLayout) -> list[list[Polynomial]]:
    """Operator matrix ``grad^dagger grad`` (k x k for beta=2, 2k x 2k for beta=4)."""
    g = _gradient_entries(layout)
    rows = len(g)
    cols = len(g[0])
    return [
        [sum((g[r][a].conjugate() * g[r][b] for r in range(rows)), Polynomial.zero(layout)) for b in range(cols)]
        for a in range(cols)
    ]


def _matmul(a, b, layout):
    size = len(a)
    return [
        [sum((a[i][t] * b[t][j] for t in range(size)), Polynomial.zero(layout)) for j in range(size)]
        for i in range(size)
    ]


def gradient_matrix_invariants(spec, p_max: int) -> list[DiffOp]:
    """Power sums ``tr((grad^dagger grad)^p) / gamma`` for p = 1..p_max.

    Dividing by gamma (2 for beta=4) removes the doubling of every eigenvalue
    in the complex representation of a quaternion matrix, so that the p = 1
    entry equals ``I1`` exactly.
    """
    layout = _spec_layout(spec)
    if layout.beta not in (2, 4):
        raise ValueError("gradient matrix invariants need beta in {2, 4}; use pair_op for beta = 1")
    gamma = 2 if layout.beta == 4 else 1
    m = gradient_gram(layout)
    power = m
    out = []
    for p in range(1, p_max + 1):
        if p > 1:
            power = _matmul(power, m, layout)
        tr = sum((power[i][i] for i in range(len(power))), Polynomial.zero(layout))
        out.append(DiffOp(tr.scale(rational(1) / gamma)))
    return out


def newton_invariants(power_sums: Sequence[DiffOp]) -> list[DiffOp]:
    """Elementary invariants ``I_1..I_r`` from power sums via Newton's identities."""
    if not power_sums:
        return []
    layout = power_sums[0].layout
    e = [DiffOp.identity(layout)]
    for r in range(1, len(power_sums) + 1):
        acc = DiffOp.zero(layout)
        for i in range(1, r + 1):
            term = e[r - i] * power_sums[i - 1]
            acc = acc + term if i % 2 == 1 else acc - term
        e.append(acc.scale(rational(1) / r))
    return e[1:]


# --------------------------------------------- variable-coefficient operators


class MulOp:
    """Multiplication by a fixed polynomial."""

    def __init__(self, poly: Polynomial):
        self.poly = poly

    def __call__(self, f: Polynomial) -> Polynomial:
        return self.poly * f


class VectorField:
    """``sum coef * x_mult * d_diff + shift``; covers Euler operators and ``<u, J grad_v>``."""

    def __init__(self, layout: CoordLayout, terms: Sequence[tuple[object, int, int]], shift=0):
        self.layout = layout
        self.terms = [(rational(c), int(a), int(b)) for c, a, b in terms]
        self.shift = rational(shift)

    def __call__(self, f: Polynomial) -> Polynomial:
        re: dict = {}
        im: dict = {}
        real = f.is_real()
        for m, c in f.terms.items():
            exps = dict(m)
            if self.shift:
                re[m] = re.get(m, ZERO) + c.re * self.shift
                if not real:
                    im[m] = im.get(m, ZERO) + c.im * self.shift
            for coef, a, b in self.terms:
                e = exps.get(b, 0)
                if not e:
                    continue
                d = dict(exps)
                if e == 1:
                    del d[b]
                else:
                    d[b] = e - 1
                d[a] = d.get(a, 0) + 1
                key = tuple(sorted(d.items()))
                w = coef * e
                re[key] = re.get(key, ZERO) + c.re * w
                if not real:
                    im[key] = im.get(key, ZERO) + c.im * w
        return Polynomial.from_rational_dict(self.layout, re, im if not real else None)


def euler_op(layout: CoordLayout, columns: Sequence[int], shift=0) -> VectorField:
    """``sum_c E_{u_c} + shift`` where ``E_u = sum_a u_a d_{u_a}``."""
    return VectorField(layout, [(1, i, i) for c in columns for i in layout.column(c)], shift)


def mixed_field(layout: CoordLayout, i: int, j: int, J=None) -> VectorField:
    """``<u_i, J grad_{u_j}> = sum_ab J_ab x_(i,a) d_(j,b)`` (J defaults to identity)."""
    size = layout.column_size
    J = np.eye(size, dtype=np.int64) if J is None else _as_jmatrix(J)
    ci, cj = layout.column(i), layout.column(j)
    return VectorField(layout, [(int(J[a, b]), ci[a], cj[b]) for a, b in zip(*np.nonzero(J))])


def pairing_poly(layout: CoordLayout, i: int, j: int, J=None) -> Polynomial:
    """``<u_i, J u_j> = sum_ab J_ab x_(i,a) x_(j,b)``."""
    size = layout.column_size
    J = np.eye(size, dtype=np.int64) if J is None else _as_jmatrix(J)
    ci, cj = layout.column(i), layout.column(j)
    terms: dict = {}
    for a, b in zip(*np.nonzero(J)):
        x, y = ci[a], cj[b]
        m = ((x, 2),) if x == y else tuple(sorted(((x, 1), (y, 1))))
        terms[m] = terms.get(m, 0) + int(J[a, b])
    return Polynomial(layout, terms)


def commutator(x: Operator, y: Operator) -> Operator:
    return lambda f: x(y(f)) - y(x(f))


# -------------------------------------------------------- commutator report


@dataclass
class CheckReport:
    passed: bool
    checked: int
    failure: str | None = None
    witness: str | None = None

    def as_dict(self) -> dict:
        out = {"passed": self.passed, "checked": self.checked}
        if self.failure is not None:
            out["failure"] = self.failure
            out["witness"] = self.witness
        return out


def commutator_relations(layout: CoordLayout, i: int = 0, j: int = 1) -> list[tuple[str, Operator, Operator]]:
    """The eight two-vector relations for columns ``u = u_i``, ``v = u_j``; ``d`` is the column size."""
    d = layout.column_size
    lap_u = column_laplacian(layout, i)
    lap_v = column_laplacian(layout, j)
    grad_uv = pair_op(layout, i, j, np.eye(d, dtype=np.int64))
    u_grad_v = mixed_field(layout, i, j)
    v_grad_u = mixed_field(layout, j, i)
    u2 = MulOp(pairing_poly(layout, i, i))
    uv = MulOp(pairing_poly(layout, i, j))
    return [
        ("[Lap_u, u^2] = 4 E_u + 2d", commutator(lap_u, u2),
         VectorField(layout, [(4, a, a) for a in layout.column(i)], 2 * d)),
        ("[<u,grad_v>, <grad_u,grad_v>] = -Lap_v", commutator(u_grad_v, grad_uv), lambda f: -lap_v(f)),
        ("[<grad_u,grad_v>, u^2] = 2 <u,grad_v>", commutator(grad_uv, u2), lambda f: u_grad_v(f).scale(2)),
        ("[Lap_u, <u,grad_v>] = 2 <grad_u,grad_v>", commutator(lap_u, u_grad_v), lambda f: grad_uv(f).scale(2)),
        ("[<v,grad_u>, u^2] = 2 <u,v>", commutator(v_grad_u, u2), lambda f: uv(f).scale(2)),
        ("[<u,grad_v>, <u,v>] = u^2", commutator(u_grad_v, uv), u2),
        ("[Lap_u, <u,v>] = 2 <v,grad_u>", commutator(lap_u, uv), lambda f: v_grad_u(f).scale(2)),
        ("[<grad_u,grad_v>, <u,v>] = E_u + E_v + d", commutator(grad_uv, uv), euler_op(layout, [i, j], d)),
    ]


def check_commutators(layout: CoordLayout, trials: int, seed: int, degree: int = 5) -> CheckReport:
    """Apply both sides of every relation to random polynomials and compare exactly."""
    if layout.k < 2:
        raise ValueError("mixed relations need at least two columns")
    rng = random.Random(seed)
    relations = commutator_relations(layout)
    checked = 0
    for _ in range(trials):
        f = random_polynomial(layout, degree, rng, n_terms=5)
        for name, lhs, rhs in relations:
            if lhs(f) != rhs(f):
                return CheckReport(False, checked, name, repr(f))
            checked += 1
    return CheckReport(True, checked)
