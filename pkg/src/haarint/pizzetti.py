"""Exact invariant-integration engines on spheres and Stiefel manifolds.

Every engine is a terminating series of invariant differential operators
applied to a polynomial and read off at the origin.  The Gamma-function
ratios in front of each term are rising factorials ``(x)_j``, so all
coefficients are exact rationals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial
from typing import Callable, Sequence

from .algebra import (
    ONE,
    ZERO,
    CoordLayout,
    GaussRational,
    Polynomial,
    Rational,
    mono_degree,
    random_polynomial,
    rational,
)
from .clifford import JSet, build_general_jset, build_jset
from .diffop import (
    CheckReport,
    DiffOp,
    MulOp,
    VectorField,
    clifford_ab,
    column_laplacian,
    commutator,
    euler_op,
    invariant_ops,
    pair_op,
    pairing_poly,
)

Scalar = Rational | GaussRational


@dataclass(frozen=True)
class StiefelSpec:
    """St^(beta)(n, n-k): n x k matrices over R, C or H with orthonormal columns."""

    beta: int
    n: int
    k: int
    layout: CoordLayout = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layout", CoordLayout(self.beta, self.n, self.k))

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def gamma(self) -> int:
        return 2 if self.beta == 4 else 1

    @cached_property
    def jset(self) -> JSet:
        return build_jset(self.beta, self.n)


@dataclass(frozen=True)
class MomentValue:
    """Exact rational from an engine, or a Monte Carlo estimate."""

    exact: Scalar | None = None
    mean: float | None = None
    stderr: float | None = None

    @property
    def is_exact(self) -> bool:
        return self.exact is not None


def poch(x: Rational, j: int) -> Rational:
    """Rising factorial ``(x)_j = Gamma(x+j)/Gamma(x)``."""
    out = ONE
    for t in range(j):
        out *= x + t
    return out


def _finish(total: GaussRational) -> Scalar:
    return total.re if total.im == 0 else total


def _even_part(f: Polynomial) -> Polynomial:
    return Polynomial._trusted(f.layout, {m: c for m, c in f.terms.items() if mono_degree(m) % 2 == 0})


# ------------------------------------------------------------------- sphere


def sphere_integrate(N: int, f: Polynomial) -> Scalar:
    """Normalized integral over the unit sphere S^(N-1) in the N coordinates of ``f``."""
    if N < 2:
        raise ValueError(f"sphere integration needs N >= 2, got {N}")
    if f.layout.dim != N:
        raise ValueError(f"polynomial lives on {f.layout.dim} coordinates, expected {N}")
    lap = DiffOp(Polynomial(f.layout, {((i, 2),): 1 for i in range(N)}))
    half = rational(N) / 2
    g = _even_part(f)
    total = GaussRational(0)
    j = 0
    while not g.is_zero():
        c = g.constant_term()
        if not c.is_zero():
            total = total + c * (ONE / (4**j * factorial(j) * poch(half, j)))
        g = lap(g)
        j += 1
    return _finish(total)


# -------------------------------------------------------- two-column series


def ab_series(a_op: DiffOp, b_op: DiffOp, f: Polynomial, x1: Rational, x2: Rational) -> Scalar:
    """``sum_j 1/(4^j (x1)_j) sum_l 1/((x2)_l (j-2l)! l!) (A^(j-2l) B^l f)(0)``."""
    g = _even_part(f)
    total = GaussRational(0)
    l = 0
    while not g.is_zero():
        h = g
        r = 0
        while not h.is_zero():
            c = h.constant_term()
            if not c.is_zero():
                j = r + 2 * l
                den = 4**j * poch(x1, j) * poch(x2, l) * factorial(r) * factorial(l)
                total = total + c * (ONE / den)
            h = a_op(h)
            r += 1
        g = b_op(g)
        l += 1
        if g.is_zero():
            break
        if x2 == 0:
            raise ValueError("series coefficient diverges: (0)_l with l >= 1")
    return _finish(total)


def codim2_integrate(spec: StiefelSpec, f: Polynomial) -> Scalar:
    """Integral over St^(beta)(n, n-2) from the two invariants I1 and I2."""
    if spec.k != 2:
        raise ValueError(f"codim2_integrate needs k = 2, got k = {spec.k}")
    if f.layout != spec.layout:
        raise ValueError(f"layout mismatch: {f.layout} vs {spec.layout}")
    i1, i2 = invariant_ops(spec)
    x1 = rational(spec.beta * spec.n) / 2
    x2 = rational(spec.beta * (spec.n - 1)) / 2
    return ab_series(i1, i2, f, x1, x2)


_SO2 = CoordLayout(1, 2, 2)


def so2_integrate(f: Polynomial) -> Scalar:
    """Integral over SO(2): the O(2) series applied to ``(1 + u1 v2 - u2 v1) f``."""
    if f.layout != _SO2:
        raise ValueError(f"so2_integrate needs layout {_SO2}, got {f.layout}")
    # u1, u2, v1, v2 sit at flat indices 0, 1, 2, 3.
    det = Polynomial(_SO2, {(): 1, ((0, 1), (3, 1)): 1, ((1, 1), (2, 1)): -1})
    return codim2_integrate(StiefelSpec(1, 2, 2), det * f)


def clifford_layout(kappa: int, m: int) -> CoordLayout:
    return CoordLayout(1, kappa * m, 2)


def clifford_functional(kappa: int, m: int, js: JSet, f: Polynomial) -> Scalar:
    """The two-vector functional on R^(kappa m x 2) built from an arbitrary J-set."""
    if m < 2:
        raise ValueError("the functional needs m >= 2")
    layout = clifford_layout(kappa, m)
    if js.d != kappa * m or js.kappa != kappa:
        raise ValueError(f"J-set has d={js.d}, kappa={js.kappa}; expected d={kappa * m}, kappa={kappa}")
    if f.layout != layout:
        raise ValueError(f"layout mismatch: {f.layout} vs {layout}")
    a_op, b_op = _clifford_ops(kappa, m, js)
    return ab_series(a_op, b_op, f, rational(kappa * m) / 2, rational(kappa * (m - 1)) / 2)


_AB_CACHE: dict = {}


def _clifford_ops(kappa: int, m: int, js: JSet):
    key = (kappa, m, tuple(mat.tobytes() for mat in js.mats))
    ops = _AB_CACHE.get(key)
    if ops is None:
        ops = clifford_ab(clifford_layout(kappa, m), js)
        _AB_CACHE[key] = ops
    return ops


def to_clifford_layout(f: Polynomial) -> Polynomial:
    """Reinterpret a two-column polynomial on (beta, n, 2) as living on R^(beta n x 2).

    The flat indices coincide, so only the layout tag changes.
    """
    lay = f.layout
    if lay.k != 2:
        raise ValueError("need a two-column layout")
    return Polynomial._trusted(CoordLayout(1, lay.beta * lay.n, 2), dict(f.terms))


# ------------------------------------------------------- column recursion


def _t_fields(spec: StiefelSpec, kcur: int) -> list[VectorField]:
    """``<u_i, J^(l) grad_{u_k}>`` for all earlier columns i and all l."""
    lay = spec.layout
    ck = lay.column(kcur - 1)
    out = []
    for i in range(kcur - 1):
        ci = lay.column(i)
        for l in range(spec.beta):
            out.append(VectorField(lay, [(s, ci[a], ck[b]) for a, b, s in spec.jset.entries(l)]))
    return out


def _column_degree(m, cols: range) -> int:
    lo, hi = cols.start, cols.stop
    return sum(e for i, e in m if lo <= i < hi)


def t_operator(spec: StiefelSpec, kcur: int, f: Polynomial) -> Polynomial:
    """Integrate out column ``kcur`` (1-based), leaving a polynomial in the earlier columns."""
    if not 1 <= kcur <= spec.k:
        raise ValueError(f"kcur must be in 1..{spec.k}, got {kcur}")
    if f.layout != spec.layout:
        raise ValueError(f"layout mismatch: {f.layout} vs {spec.layout}")
    cols = spec.layout.column(kcur - 1)
    for m in f.terms:
        for i, _ in m:
            if i >= cols.stop:
                raise ValueError(f"polynomial depends on columns beyond {kcur}")
    lap = column_laplacian(spec.layout, kcur - 1)
    fields = _t_fields(spec, kcur)
    x = rational(spec.beta * (spec.n - kcur + 1)) / 2

    def d_op(g: Polynomial) -> Polynomial:
        out = lap(g)
        for v in fields:
            out = out - v(v(g))
        return out

    g = Polynomial._trusted(
        spec.layout, {m: c for m, c in f.terms.items() if _column_degree(m, cols) % 2 == 0}
    )
    result: dict = {}
    j = 0
    while not g.is_zero():
        coef = ONE / (4**j * factorial(j) * poch(x, j))
        for m, c in g.terms.items():
            if _column_degree(m, cols) == 0:
                prev = result.get(m)
                val = c * coef
                result[m] = val if prev is None else prev + val
        g = d_op(g)
        j += 1
    return Polynomial(spec.layout, result)


def recursion_integrate(spec: StiefelSpec, f: Polynomial) -> Scalar:
    """Peel off columns k, k-1, ..., 1 with the single-column transform."""
    if spec.beta == 1 and spec.k == spec.n and spec.n > 2:
        raise ValueError("beta = 1 with k = n > 2 needs the SO(n) restriction, which is not supported")
    g = f
    for kcur in range(spec.k, 0, -1):
        g = t_operator(spec, kcur, g)
    for m in g.terms:
        if m:
            raise ArithmeticError("recursion left a non-constant polynomial")
    return _finish(g.constant_term())


# ------------------------------------------------------------ dispatching


ENGINES = ("sphere", "codim2", "so2", "clifford", "recursion")


def engines_for(spec: StiefelSpec) -> list[str]:
    out = []
    if spec.k == 1 and spec.beta * spec.n >= 2:
        out.append("sphere")
    if spec.k == 2 and spec.n >= 2:
        out += ["codim2", "clifford"]
    if (spec.beta, spec.n, spec.k) == (1, 2, 2):
        out.append("so2")
    if not (spec.beta == 1 and spec.k == spec.n and spec.n > 2):
        out.append("recursion")
    return out


def integrate(spec: StiefelSpec, f: Polynomial, engine: str = "auto") -> Scalar:
    """Route to one engine; ``auto`` picks so2 for SO(2), else the closed series when k <= 2."""
    if f.layout != spec.layout:
        raise ValueError(f"layout mismatch: {f.layout} vs {spec.layout}")
    if engine == "auto":
        if (spec.beta, spec.n, spec.k) == (1, 2, 2):
            engine = "so2"
        elif spec.k == 1 and spec.beta * spec.n >= 2:
            engine = "sphere"
        elif spec.k == 2:
            engine = "codim2"
        else:
            engine = "recursion"
    if engine == "sphere":
        if spec.k != 1:
            raise ValueError("sphere engine needs k = 1")
        return sphere_integrate(spec.beta * spec.n, f)
    if engine == "codim2":
        return codim2_integrate(spec, f)
    if engine == "so2":
        return so2_integrate(f)
    if engine == "clifford":
        if spec.k != 2:
            raise ValueError("clifford engine needs k = 2")
        js = build_general_jset(spec.beta, spec.beta * spec.n)
        return clifford_functional(spec.beta, spec.n, js, to_clifford_layout(f))
    if engine == "recursion":
        return recursion_integrate(spec, f)
    raise ValueError(f"unknown engine {engine!r}")


# ------------------------------------------------------- invariance checks


def column_pairings(spec: StiefelSpec) -> list[tuple[int, int, int, Polynomial]]:
    """All scalar pairings ``<u_i, J^(l) u_j>`` (i <= j) with their manifold values."""
    out = []
    for i in range(spec.k):
        for j in range(i, spec.k):
            for l in range(spec.beta):
                if i == j and l > 0:
                    continue  # antisymmetric J gives the zero polynomial
                out.append((i, j, l, pairing_poly(spec.layout, i, j, spec.jset.mats[l])))
    return out


def jset_pairings(spec: StiefelSpec) -> list[list[tuple[int, int, int]]]:
    """Signed coordinate pairs of every ``<u_i, J^(l) u_j>``, for structured random tests."""
    lay = spec.layout
    blocks = []
    for i in range(spec.k):
        for j in range(i, spec.k):
            for l in range(spec.beta):
                ci, cj = lay.column(i), lay.column(j)
                blocks.append([(ci[a], cj[b], s) for a, b, s in spec.jset.entries(l)])
    return blocks


def random_spec_polynomial(spec: StiefelSpec, degree: int, rng: random.Random, n_terms: int = 4) -> Polynomial:
    return random_polynomial(spec.layout, degree, rng, n_terms=n_terms, pairings=jset_pairings(spec))


def prop43_check(
    spec: StiefelSpec,
    trials: int,
    seed: int,
    degree: int = 4,
    engines: Sequence[str] | None = None,
    pairings_per_trial: int | None = None,
) -> CheckReport:
    """``E(<u_i,u_i> f) = E(f)`` and ``E(<u_i, J^(l) u_j> f) = 0`` otherwise, exactly.

    With ``pairings_per_trial`` set, each trial uses that many pairings taken
    cyclically from the full list, so every pairing is still exercised.
    """
    rng = random.Random(seed)
    engines = list(engines) if engines is not None else engines_for(spec)
    pairs = column_pairings(spec)
    checked = 0
    cursor = 0
    for _ in range(trials):
        f = random_spec_polynomial(spec, degree, rng)
        if pairings_per_trial is None:
            chosen = pairs
        else:
            chosen = [pairs[(cursor + t) % len(pairs)] for t in range(pairings_per_trial)]
            cursor += pairings_per_trial
        for eng in engines:
            base = integrate(spec, f, eng)
            for i, j, l, p in chosen:
                want = base if (i == j and l == 0) else ZERO
                got = integrate(spec, p * f, eng)
                if got != want:
                    return CheckReport(False, checked, f"{eng}: pairing ({i},{j},J{l})", repr(f))
                checked += 1
    return CheckReport(True, checked)


_LEFT_UNITS = {
    1: [((1,),)],
    2: [((1, 0), (0, 1)), ((0, -1), (1, 0))],
    # left multiplication by 1, i, j, k on the components (Re P, Im P, Re Q, Im Q)
    4: [
        ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),
        ((0, -1, 0, 0), (1, 0, 0, 0), (0, 0, 0, -1), (0, 0, 1, 0)),
        ((0, 0, -1, 0), (0, 0, 0, 1), (1, 0, 0, 0), (0, -1, 0, 0)),
        ((0, 0, 0, -1), (0, 0, -1, 0), (0, 1, 0, 0), (1, 0, 0, 0)),
    ],
}


def signed_permutation_check(spec: StiefelSpec, trials: int, seed: int, degree: int = 4) -> CheckReport:
    """``E(f o P) = E(f)`` for random monomial matrices P in U^(beta)(n).

    P permutes rows and multiplies each row on the left by a unit
    (+-1, +-i, +-j, +-k), so ``f o P`` is again an exact polynomial.
    """
    rng = random.Random(seed)
    lay = spec.layout
    units = _LEFT_UNITS[spec.beta]
    checked = 0
    for _ in range(trials):
        f = random_spec_polynomial(spec, degree, rng)
        perm = list(range(spec.n))
        rng.shuffle(perm)
        row_units = [(units[rng.randrange(len(units))], rng.choice((1, -1))) for _ in range(spec.n)]
        sub: dict[int, list[tuple[int, int]]] = {}
        for c in range(spec.k):
            for r in range(spec.n):
                blk, s = row_units[r]
                for comp in range(spec.beta):
                    sub[lay.index(c, comp, r)] = [
                        (lay.index(c, comp2, perm[r]), s * blk[comp][comp2])
                        for comp2 in range(spec.beta)
                        if blk[comp][comp2]
                    ]
        g = substitute_linear(f, sub)
        for eng in engines_for(spec):
            if integrate(spec, g, eng) != integrate(spec, f, eng):
                return CheckReport(False, checked, f"{eng}: signed permutation", repr(f))
            checked += 1
    return CheckReport(True, checked)


def substitute_linear(f: Polynomial, sub: dict[int, list[tuple[int, int]]]) -> Polynomial:
    """Replace each ``x_i`` by ``sum s * x_j`` from ``sub[i]``."""
    lay = f.layout
    images = {i: Polynomial(lay, {((j, 1),): s for j, s in row}) for i, row in sub.items()}
    out = Polynomial.zero(lay)
    for m, c in f.terms.items():
        t = Polynomial._trusted(lay, {(): c})
        for i, e in m:
            img = images.get(i, Polynomial.var(lay, i))
            t = t * img**e
        out = out + t
    return out


# ---------------------------------------------- two-vector functional lemmas


def b_u_operator(kappa: int, m: int, js: JSet, l: int) -> Callable[[Polynomial], Polynomial]:
    """``4l((E_u + kappa(m-1)/2 + l - 1) Lap_v - sum_j <u, J^(j) grad_v> <grad_u, J^(j) grad_v>)``."""
    lay = clifford_layout(kappa, m)
    lap_v = column_laplacian(lay, 1)
    shift = rational(kappa * (m - 1)) / 2 + l - 1
    euler = euler_op(lay, [0], shift)
    cu, cv = lay.column(0), lay.column(1)
    parts = []
    for j in range(js.kappa):
        ent = js.entries(j)
        field_ = VectorField(lay, [(s, cu[a], cv[b]) for a, b, s in ent])
        parts.append((field_, pair_op(lay, 0, 1, js.mats[j])))

    def apply(f: Polynomial) -> Polynomial:
        out = euler(lap_v(f))
        for field_, op in parts:
            out = out - field_(op(f))
        return out.scale(4 * l)

    return apply


def _power(op, e: int):
    def apply(f):
        for _ in range(e):
            f = op(f)
        return f

    return apply


def clifford_lemma_check(
    kappa: int, m: int, trials: int, seed: int, l_max: int = 3, p_max: int = 3, degree: int = 5
) -> CheckReport:
    """``[B^l, u^2] = B_u^(l) B^(l-1)`` and ``[A^p, B_u^(l)] = 8 p l A^(p-1) B`` on random polynomials."""
    lay = clifford_layout(kappa, m)
    js = build_general_jset(kappa, kappa * m)
    a_op, b_op = _clifford_ops(kappa, m, js)
    u2 = MulOp(pairing_poly(lay, 0, 0))
    rng = random.Random(seed)
    blocks = []
    for j in range(js.kappa):
        blocks.append([(lay.column(0)[a], lay.column(1)[b], s) for a, b, s in js.entries(j)])
    checked = 0
    bus = {l: b_u_operator(kappa, m, js, l) for l in range(1, l_max + 1)}
    for _ in range(trials):
        f = random_polynomial(lay, degree, rng, n_terms=5, pairings=blocks)
        for l in range(1, l_max + 1):
            bl = _power(b_op, l)
            lhs = commutator(bl, u2)(f)
            rhs = bus[l](_power(b_op, l - 1)(f))
            if lhs != rhs:
                return CheckReport(False, checked, f"[B^{l}, u^2]", repr(f))
            checked += 1
            for p in range(1, p_max + 1):
                lhs = commutator(_power(a_op, p), bus[l])(f)
                rhs = b_op(_power(a_op, p - 1)(f)).scale(8 * p * l)
                if lhs != rhs:
                    return CheckReport(False, checked, f"[A^{p}, B_u^({l})]", repr(f))
                checked += 1
    return CheckReport(True, checked)


def clifford_u2_check(kappa: int, m: int, trials: int, seed: int, degree: int = 6) -> CheckReport:
    """``T(u^2 f) = T(f)`` for the two-vector functional."""
    lay = clifford_layout(kappa, m)
    js = build_general_jset(kappa, kappa * m)
    u2 = pairing_poly(lay, 0, 0)
    rng = random.Random(seed)
    for t in range(trials):
        f = random_polynomial(lay, degree - 2, rng, n_terms=4)
        if clifford_functional(kappa, m, js, u2 * f) != clifford_functional(kappa, m, js, f):
            return CheckReport(False, t, "T(u^2 f) = T(f)", repr(f))
    return CheckReport(True, trials)
