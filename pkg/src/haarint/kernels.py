"""Kernel functions: the Stiefel average of ``exp(i <B, A>)`` as a function of singular values.

Two evaluation routes share every formula:

* closed form in floating point (Bessel functions, determinants, Pfaffians);
* exact Taylor polynomials in ``x_a = Lambda_a^2``, obtained from the same
  determinant/Pfaffian expressions with rational Bessel coefficients and an
  exact division by the Vandermonde product.

Small arguments use the Taylor route because the Vandermonde ratio cancels
catastrophically there.  The Taylor route also pins every proportionality
constant: a kernel must equal 1 at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.special

from .algebra import ONE, ZERO, CoordLayout, Polynomial, Rational, divide_by_difference, rational
from .pizzetti import StiefelSpec, recursion_integrate

EPS_GAP = 1e-6
SERIES_SWITCH = 6.0  # |x| above which Bessel values come from scipy
TAYLOR_LIMIT = 1.0  # max Lambda for the kernel Taylor route
TAYLOR_DEGREE = 14  # total degree in x = Lambda^2
PAIR_TAYLOR_LIMIT = 2.0
PAIR_TAYLOR_DEGREE = 24


@dataclass(frozen=True)
class KernelArgs:
    spec: StiefelSpec
    lambdas: tuple[float, ...]

    def __post_init__(self):
        check_lambdas(self.lambdas, self.spec.k)


@dataclass(frozen=True)
class KernelValue:
    value: float
    method: str
    truncation: int | None = None
    route: str = "closed"


def check_lambdas(lambdas: Sequence[float], k: int | None = None) -> tuple[float, ...]:
    lam = tuple(float(v) for v in lambdas)
    if k is not None and len(lam) != k:
        raise ValueError(f"expected {k} singular values, got {len(lam)}")
    if not lam:
        raise ValueError("need at least one singular value")
    for v in lam:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"singular values must be finite and positive, got {v}")
    for i in range(len(lam)):
        for j in range(i + 1, len(lam)):
            if abs(lam[i] - lam[j]) <= EPS_GAP * max(lam[i], lam[j]):
                raise ValueError(f"degenerate singular values {lam[i]} and {lam[j]}")
    return lam


# ------------------------------------------------------------------ Bessel


def _series_phi(nu: float, x: float) -> float:
    """``sum_j (-1)^j (x/2)^(2j) / (j! Gamma(j+nu+1))`` by term recurrence and fsum."""
    q = -(x * x) / 4.0
    terms = []
    j = 0
    # skip leading terms where 1/Gamma vanishes (nu a negative integer)
    while nu + j + 1 <= 0 and float(nu).is_integer():
        j += 1
    t = q**j / (math.factorial(j) * math.gamma(j + nu + 1))
    while True:
        terms.append(t)
        j += 1
        t *= q / (j * (j + nu))
        if abs(t) < 1e-18 * max(abs(s) for s in terms) and j > 2:
            break
    return math.fsum(terms)


def bessel_phi(nu: float, x: float) -> float:
    """``J_nu(x) (2/x)^nu``, finite at x = 0 and defined for nu >= -1."""
    x = abs(float(x))
    if x <= SERIES_SWITCH:
        return _series_phi(nu, x)
    return float(scipy.special.jv(nu, x) * (2.0 / x) ** nu)


def bessel_psi(nu: float, x: float) -> float:
    """Renormalized Bessel function ``Gamma(nu+1) J_nu(x) / (x/2)^nu`` with value 1 at 0."""
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if nu <= -1:
        raise ValueError("Gamma(nu+1) needs nu > -1")
    x = abs(float(x))
    if x <= SERIES_SWITCH:
        return math.gamma(nu + 1) * _series_phi(nu, x)
    return float(math.gamma(nu + 1) * scipy.special.jv(nu, x) * (2.0 / x) ** nu)


def _factorial_or_none(n: int):
    return math.factorial(n) if n >= 0 else None


def phi_coefficients(nu: int, degree: int) -> list[Rational]:
    """Exact coefficients of ``J_nu(L)(2/L)^nu`` in powers of ``x = L^2`` (integer nu >= -1)."""
    out = []
    for j in range(degree + 1):
        g = _factorial_or_none(j + nu)
        out.append(ZERO if g is None else rational((-1) ** j) / (4**j * math.factorial(j) * g))
    return out


def psi_coefficients(nu: int, degree: int) -> list[Rational]:
    """Exact coefficients of ``Psi_nu`` in powers of ``x = L^2``."""
    return [c * math.factorial(nu) for c in phi_coefficients(nu, degree)]


# ---------------------------------------------------- truncated series algebra

Series = dict  # exponent tuple -> Rational


def _s_add(a: Series, b: Series, scale=ONE) -> Series:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, ZERO) + scale * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _s_mul(a: Series, b: Series, degree: int) -> Series:
    out: Series = {}
    for ea, ca in a.items():
        da = sum(ea)
        if da > degree:
            continue
        for eb, cb in b.items():
            if da + sum(eb) > degree:
                continue
            e = tuple(p + q for p, q in zip(ea, eb))
            out[e] = out.get(e, ZERO) + ca * cb
    return {e: c for e, c in out.items() if c}


def _s_univariate(coeffs: Sequence[Rational], var: int, nvars: int, shift: int = 0) -> Series:
    out: Series = {}
    for j, c in enumerate(coeffs):
        if c:
            e = [0] * nvars
            e[var] = j + shift
            out[tuple(e)] = c
    return out


def _s_to_poly(s: Series, nvars: int) -> Polynomial:
    lay = CoordLayout(1, nvars, 1)
    return Polynomial(lay, {tuple((i, p) for i, p in enumerate(e) if p): c for e, c in s.items()})


def _poly_to_s(p: Polynomial, nvars: int) -> Series:
    out: Series = {}
    for m, c in p.terms.items():
        e = [0] * nvars
        for i, k in m:
            e[i] = k
        out[tuple(e)] = c.re
    return out


def _divide_vandermonde(s: Series, nvars: int) -> Series:
    """Exact division by ``prod_{a<b} (x_a - x_b)``; every homogeneous part must be divisible."""
    p = _s_to_poly(s, nvars)
    for a in range(nvars):
        for b in range(a + 1, nvars):
            p = divide_by_difference(p, a, b)
    return _poly_to_s(p, nvars)


def _s_eval(s: Series, x: Sequence[float]) -> float:
    parts = []
    for e, c in s.items():
        v = float(c)
        for xi, p in zip(x, e):
            if p:
                v *= xi**p
        parts.append(v)
    return math.fsum(parts)


def _s_truncate(s: Series, degree: int) -> Series:
    return {e: c for e, c in s.items() if sum(e) <= degree}


# ------------------------------------------------------- pair function beta=4


def _bracket_series(m: int, degree: int) -> Series:
    """Unnormalized pair function as an exact bivariate series in (x, y) = (La^2, Lb^2).

    ``F = g1/(x-y)^2 - 8 g2/(x-y)^3`` with ``phi_nu`` Bessel functions; built as
    ``P = g1 (x-y) - 8 g2`` then divided by ``(x-y)`` three times.
    """
    top = degree + 3
    ph = {nu: phi_coefficients(nu, top) for nu in (2 * m - 1, 2 * m, 2 * m + 1)}

    def prod(na, nb):
        return _s_mul(_s_univariate(ph[na], 0, 2), _s_univariate(ph[nb], 1, 2), top)

    g1 = _s_add(_s_add(prod(2 * m - 1, 2 * m + 1), prod(2 * m, 2 * m), -2), prod(2 * m + 1, 2 * m - 1))
    g2 = _s_add(prod(2 * m - 1, 2 * m), prod(2 * m, 2 * m - 1), -1)
    diff = {(1, 0): ONE, (0, 1): -ONE}
    p = _s_add(_s_mul(g1, diff, top), g2, rational(-8))
    # drop the top degree: its quotient would need degree top+1 information
    p = _s_truncate(p, top)
    poly = _s_to_poly(p, 2)
    for _ in range(3):
        poly = divide_by_difference(poly, 0, 1)
    return _s_truncate(_poly_to_s(poly, 2), degree)


@lru_cache(maxsize=None)
def bracket_constant(m: int) -> Rational:
    """Value of the unnormalized pair function at the origin."""
    return _bracket_series(m, 0).get((0, 0), ZERO)


@lru_cache(maxsize=None)
def psi_tilde4_series(m: int, degree: int) -> tuple:
    """Normalized pair function: exact coefficients ``{(i, j): c}`` of ``x^i y^j``."""
    s = _bracket_series(m, degree)
    c0 = s[(0, 0)]
    return tuple(sorted((e, c / c0) for e, c in s.items()))


def codim2_beta4_series(m: int, degree: int) -> Series:
    """Independent source: the two-invariant series of St^(4)(m+2, m) in (x, y).

    Trace and Pfaffian invariants are ``x + y`` and ``x y``; the coefficient
    of ``(x+y)^(j-2l) (x y)^l`` is ``(-1)^j / (4^j (2n)_j (2n-2)_l (j-2l)! l!)`` with n = m+2.
    """
    from .pizzetti import poch

    n = m + 2
    out: Series = {}
    for j in range(degree + 1):
        for l in range(j // 2 + 1):
            c = rational((-1) ** j) / (
                4**j * poch(rational(2 * n), j) * poch(rational(2 * n - 2), l) * math.factorial(j - 2 * l) * math.factorial(l)
            )
            r = j - 2 * l
            for t in range(r + 1):
                e = (t + l, r - t + l)
                out[e] = out.get(e, ZERO) + c * math.comb(r, t)
    return {e: c for e, c in out.items() if c}


def _bracket_float(m: int, la: float, lb: float) -> tuple[float, float]:
    """Unnormalized pair function and a rounding-error estimate, direct from Bessel values."""
    x, y = la * la, lb * lb
    pa = {nu: bessel_phi(nu, la) for nu in (2 * m - 1, 2 * m, 2 * m + 1)}
    pb = {nu: bessel_phi(nu, lb) for nu in (2 * m - 1, 2 * m, 2 * m + 1)}
    t1 = [pa[2 * m - 1] * pb[2 * m + 1], -2 * pa[2 * m] * pb[2 * m], pa[2 * m + 1] * pb[2 * m - 1]]
    t2 = [pa[2 * m - 1] * pb[2 * m], -pa[2 * m] * pb[2 * m - 1]]
    d = x - y
    g1, g2 = math.fsum(t1), math.fsum(t2)
    value = g1 / d**2 - 8 * g2 / d**3
    scale = sum(abs(t) for t in t1) / d**2 + 8 * sum(abs(t) for t in t2) / abs(d) ** 3
    return value, 8 * np.finfo(float).eps * scale


def psi_tilde4_pair(m: int, la: float, lb: float) -> float:
    """Normalized pair function for St^(4)(m+2, m); equals 1 at the origin."""
    if m < 0:
        raise ValueError("m must be non-negative")
    la, lb = check_lambdas([la, lb])
    if max(la, lb) <= PAIR_TAYLOR_LIMIT:
        s = psi_tilde4_series(m, PAIR_TAYLOR_DEGREE)
        return _s_eval(dict(s), (la * la, lb * lb))
    value, err = _bracket_float(m, la, lb)
    if err > 1e-9 * abs(value):
        raise ValueError(f"arguments {la}, {lb} too close for stable evaluation")
    return value / float(bracket_constant(m))


# ------------------------------------------------------------------ Pfaffian


def pfaffian(c) -> float:
    """Pfaffian by Householder reduction to tridiagonal form."""
    a = np.array(c, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("need a square matrix")
    n = a.shape[0]
    if n % 2:
        raise ValueError("Pfaffian needs even dimension")
    if not np.allclose(a, -a.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(a)))):
        raise ValueError("matrix is not antisymmetric")
    sign = 1.0
    for k in range(n - 2):
        v = a[k + 1 :, k].copy()
        alpha = np.linalg.norm(v)
        if alpha == 0 or np.all(v[1:] == 0):
            continue
        alpha = -math.copysign(alpha, v[0])
        v[0] -= alpha
        v /= np.linalg.norm(v)
        # a <- H a H with H = 1 - 2 v v^T on rows/cols k+1..
        sub = a[k + 1 :, :]
        sub -= 2.0 * np.outer(v, v @ sub)
        a[k + 1 :, :] = sub
        sub = a[:, k + 1 :]
        sub -= 2.0 * np.outer(sub @ v, v)
        a[:, k + 1 :] = sub
        sign = -sign
    return sign * float(np.prod([a[i, i + 1] for i in range(0, n, 2)]))


def _pf_series(entries: dict, idx: tuple, degree: int) -> Series:
    """Pfaffian of a matrix of series by expansion along the first row."""
    if not idx:
        return {(0,) * _pf_series.nvars: ONE}
    first = idx[0]
    out: Series = {}
    for pos in range(1, len(idx)):
        j = idx[pos]
        rest = idx[1:pos] + idx[pos + 1 :]
        term = _s_mul(entries[(first, j)], _pf_series(entries, rest, degree), degree)
        out = _s_add(out, term, ONE if pos % 2 == 1 else -ONE)
    return out


# ------------------------------------------------------------- kernel Taylor


@lru_cache(maxsize=None)
def kernel_taylor_beta2(n: int, m: int, degree: int) -> tuple:
    """Exact Taylor coefficients in x of ``det[x_a^(k-b) Psi_(n-b)(L_a)] / Delta(x)``."""
    k = n - m
    vd = k * (k - 1) // 2
    top = degree + vd
    cols = [psi_coefficients(n - b, top) for b in range(1, k + 1)]
    num: Series = {}
    for perm in permutations(range(k)):
        sgn = _perm_sign(perm)
        term: Series = {(0,) * k: ONE}
        for a in range(k):
            b = perm[a]
            term = _s_mul(term, _s_univariate(cols[b], a, k, shift=k - 1 - b), top)
        num = _s_add(num, term, ONE if sgn > 0 else -ONE)
    q = _divide_vandermonde(num, k)
    return tuple(sorted(_s_truncate(q, degree).items()))


def _perm_sign(perm) -> int:
    sgn = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sgn = -sgn
    return sgn


def _pair_entry(m: int, a: int, b: int, k: int, degree: int) -> Series:
    """``(x_a - x_b) Psi~(x_a, x_b)`` as a series in k variables (the 1/16 is applied globally)."""
    pair = dict(psi_tilde4_series(m, degree))
    out: Series = {}
    for (i, j), c in pair.items():
        for da, db, s in ((1, 0, 1), (0, 1, -1)):
            e = [0] * k
            e[a] += i + da
            e[b] += j + db
            if sum(e) <= degree + 1:
                t = tuple(e)
                out[t] = out.get(t, ZERO) + s * c
    return {e: c for e, c in out.items() if c}


@lru_cache(maxsize=None)
def _beta4_raw_taylor(n: int, m: int, degree: int) -> tuple:
    """Pfaffian over Vandermonde in x, before the constant is fixed; includes all powers of 16."""
    k = n - m
    vd = k * (k - 1) // 2
    top = degree + vd
    pair_deg = top
    if k % 2 == 0:
        nv = k
        entries = {}
        for a in range(k):
            for b in range(k):
                if a != b:
                    entries[(a, b)] = _pair_entry(m, a, b, k, pair_deg) if a < b else None
        for a in range(k):
            for b in range(a):
                entries[(a, b)] = {e: -c for e, c in entries[(b, a)].items()}
        _pf_series.nvars = nv
        num = _pf_series(entries, tuple(range(k)), top)
        n_pairs = k // 2
    else:
        # bordered with index 0 = the point at infinity, variables 0..k-1 on indices 1..k
        psi = psi_coefficients(2 * m + 1, top)
        entries = {}
        for b in range(k):
            s = _s_univariate(psi, b, k)
            entries[(0, b + 1)] = s
            entries[(b + 1, 0)] = {e: -c for e, c in s.items()}
        for a in range(k):
            for b in range(a + 1, k):
                s = _pair_entry(m, a, b, k, pair_deg)
                entries[(a + 1, b + 1)] = s
                entries[(b + 1, a + 1)] = {e: -c for e, c in s.items()}
        _pf_series.nvars = k
        num = _pf_series(entries, tuple(range(k + 1)), top)
        n_pairs = (k - 1) // 2
    num = _s_truncate(num, top)
    q = _divide_vandermonde(num, k)
    # (x_a - x_b)/16 per Pfaffian pair factor, Delta(x/16) = Delta(x)/16^vd
    factor = rational(16) ** vd / rational(16) ** n_pairs
    return tuple(sorted((e, c * factor) for e, c in _s_truncate(q, degree).items()))


@lru_cache(maxsize=None)
def beta4_constant(n: int, m: int) -> Rational:
    """Constant that makes the Pfaffian formula equal 1 at the origin."""
    raw = dict(_beta4_raw_taylor(n, m, 0))
    c0 = raw.get((0,) * (n - m), ZERO)
    if c0 == 0:
        raise ArithmeticError("Pfaffian formula vanishes at the origin")
    return ONE / c0


def printed_beta4_constant(n: int, m: int) -> float:
    """The closed-form prefactor of the Pfaffian formula as printed, for comparison."""
    k = n - m
    root = math.sqrt(math.gamma(2 * m + 3) * math.gamma(2 * m + 1))
    out = 1.0
    if k % 2 == 0:
        for j in range(1, k + 1):
            out *= 2.0 ** (-2 * j - 1) * math.gamma(2 * j + 2 * m - 1) / root
    else:
        for j in range(1, k):
            out *= 2.0 ** (-2 * j + 1) * math.gamma(2 * j + 2 * m + 1) / root
    return out


@lru_cache(maxsize=None)
def kernel_taylor_beta4(n: int, m: int, degree: int) -> tuple:
    c = beta4_constant(n, m)
    return tuple((e, v * c) for e, v in _beta4_raw_taylor(n, m, degree))


def kernel_taylor(spec: StiefelSpec, degree: int) -> Series:
    if spec.beta == 2:
        return dict(kernel_taylor_beta2(spec.n, spec.m, degree))
    if spec.beta == 4:
        return dict(kernel_taylor_beta4(spec.n, spec.m, degree))
    raise ValueError("closed-form kernels exist for beta in {2, 4}")


# -------------------------------------------------------------- closed forms


def _vandermonde(x: Sequence[float]) -> float:
    out = 1.0
    for a in range(len(x)):
        for b in range(a + 1, len(x)):
            out *= x[a] - x[b]
    return out


def _use_taylor(route: str, lam: Sequence[float]) -> bool:
    if route not in ("auto", "closed", "taylor"):
        raise ValueError(f"unknown route {route!r}")
    return route == "taylor" or route == "auto" and max(lam) <= TAYLOR_LIMIT


def psi_hat_beta2(n: int, m: int, lambdas: Sequence[float], route: str = "auto") -> KernelValue:
    """Unitary kernel ``det[L_a^(2(k-b)) Psi_(n-b)(L_a)] / Delta(L^2)``.

    ``route`` forces the closed form or the Taylor polynomial; ``auto`` takes
    the Taylor polynomial when every Lambda is at most ``TAYLOR_LIMIT``.
    """
    k = n - m
    lam = check_lambdas(lambdas, k)
    if k == 1:
        return KernelValue(bessel_psi(n - 1, lam[0]), "bessel")
    if _use_taylor(route, lam):
        s = dict(kernel_taylor_beta2(n, m, TAYLOR_DEGREE))
        return KernelValue(_s_eval(s, [v * v for v in lam]), "det_beta2", TAYLOR_DEGREE, "taylor")
    mat = np.array([[v ** (2 * (k - b)) * bessel_psi(n - b, v) for b in range(1, k + 1)] for v in lam])
    lu, piv = scipy.linalg.lu_factor(mat)
    det = float(np.prod(np.diag(lu)) * (-1) ** int(np.sum(piv != np.arange(k))))
    return KernelValue(det / _vandermonde([v * v for v in lam]), "det_beta2")


def psi_hat_beta2_trace(n: int, m: int, lambdas: Sequence[float]) -> KernelValue:
    """Same kernel as a ratio of Hankel-type determinants of traces.

    Entries are ``tr(L^(2(a+b-2)) Psi_(m+b-1)(L))`` over ``tr L^(2(a+b-2))``, which
    depend on B only through ``B^dagger B``.  Ill-conditioned for large k.
    """
    k = n - m
    lam = check_lambdas(lambdas, k)
    x = np.array([v * v for v in lam])
    psi = np.array([[bessel_psi(m + b, v) for b in range(k)] for v in lam])
    num = np.array([[np.sum(x ** (a + b) * psi[:, b]) for b in range(k)] for a in range(k)])
    den = np.array([[np.sum(x ** (a + b)) for b in range(k)] for a in range(k)])
    return KernelValue(float(np.linalg.det(num) / np.linalg.det(den)), "det_beta2")


def psi_hat_beta4(n: int, m: int, lambdas: Sequence[float], route: str = "auto") -> KernelValue:
    """Quaternion kernel from the Pfaffian formula, even or bordered odd form."""
    k = n - m
    if k < 1:
        raise ValueError("need k >= 1")
    lam = check_lambdas(lambdas, k)
    if k == 1:
        return KernelValue(bessel_psi(2 * n - 1, lam[0]), "bessel")
    method = "pfaffian_beta4_even" if k % 2 == 0 else "pfaffian_beta4_odd"
    if _use_taylor(route, lam):
        s = dict(kernel_taylor_beta4(n, m, TAYLOR_DEGREE))
        return KernelValue(_s_eval(s, [v * v for v in lam]), method, TAYLOR_DEGREE, "taylor")
    x = [v * v for v in lam]
    off = 0 if k % 2 == 0 else 1
    size = k + off
    mat = np.zeros((size, size))
    if off:
        for b in range(k):
            mat[0, b + 1] = bessel_psi(2 * m + 1, lam[b])
            mat[b + 1, 0] = -mat[0, b + 1]
    for a in range(k):
        for b in range(a + 1, k):
            v = (x[a] - x[b]) / 16.0 * psi_tilde4_pair(m, lam[a], lam[b])
            mat[a + off, b + off] = v
            mat[b + off, a + off] = -v
    vd = _vandermonde([xi / 16.0 for xi in x])
    value = float(beta4_constant(n, m)) * pfaffian(mat) / vd
    return KernelValue(value, method)


def psi_hat(spec: StiefelSpec, lambdas: Sequence[float], route: str = "auto") -> KernelValue:
    if spec.beta == 2:
        return psi_hat_beta2(spec.n, spec.m, lambdas, route)
    if spec.beta == 4:
        return psi_hat_beta4(spec.n, spec.m, lambdas, route)
    if spec.k == 1:
        lam = check_lambdas(lambdas, 1)
        return KernelValue(bessel_psi(spec.n / 2 - 1, lam[0]), "bessel")
    raise ValueError("no closed-form kernel for beta = 1 beyond the sphere")


# ------------------------------------------------------- moment-side series


def diagonal_coordinates(spec: StiefelSpec) -> list[int]:
    """Flat indices of Re A_aa: the real pairing with B = diag(Lambda) is sum Lambda_a x_(a,0,a)."""
    return [spec.layout.index(a, 0, a) for a in range(spec.k)]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _moment_coefficient(spec: StiefelSpec, gamma: tuple) -> Rational:
    """Coefficient of ``prod x_a^gamma_a``: ``(-1)^|gamma| E[prod y_a^(2 gamma_a)] / prod (2 gamma_a)!``."""
    idx = diagonal_coordinates(spec)
    f = Polynomial(spec.layout, {tuple(sorted((idx[a], 2 * g) for a, g in enumerate(gamma) if g)): 1})
    val = recursion_integrate(spec, f)
    den = 1
    for g in gamma:
        den *= math.factorial(2 * g)
    return rational((-1) ** sum(gamma)) * val / den


def moment_taylor(spec: StiefelSpec, degree: int) -> Series:
    """Taylor coefficients in x of the Stiefel average, up to total x-degree ``degree``."""
    out: Series = {}
    for d in range(degree + 1):
        for gamma in _compositions(d, spec.k):
            c = _moment_coefficient(spec, gamma)
            if c:
                out[gamma] = c
    return out


@dataclass
class DegreeRow:
    degree: int  # in Lambda
    series_term: float
    kernel_term: float
    exact_match: bool
    ratio: Rational | None


@dataclass
class MomentCheck:
    series_value: float
    kernel_value: float
    tail_bound: float
    rows: list[DegreeRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return abs(self.series_value - self.kernel_value) <= self.tail_bound

    @property
    def mismatched_degrees(self) -> list[int]:
        return [r.degree for r in self.rows if not r.exact_match]

    def as_dict(self) -> dict:
        return {
            "series": self.series_value,
            "kernel": self.kernel_value,
            "tail_bound": self.tail_bound,
            "passed": self.passed,
            "degrees": [
                {
                    "degree": r.degree,
                    "series_term": r.series_term,
                    "kernel_term": r.kernel_term,
                    "exact_match": r.exact_match,
                    "ratio": None if r.ratio is None else str(r.ratio),
                }
                for r in self.rows
            ],
        }


def kernel_moment_check(spec: StiefelSpec, lambdas: Sequence[float], degree: int) -> MomentCheck:
    """Compare exact Stiefel moments of ``<B, A>`` against the closed-form kernel.

    ``B = diag(Lambda)`` in the first k rows.  The series runs to Lambda-degree
    ``degree``; the next even degree gives the tail bound (terms alternate in
    sign by degree).  Each degree also compares the exact Taylor coefficients
    of the kernel formula with the moments.
    """
    if degree % 2 or degree < 0 or degree > 12:
        raise ValueError("degree must be even and at most 12")
    if spec.beta not in (2, 4):
        raise ValueError("closed-form kernels exist for beta in {2, 4}")
    lam = check_lambdas(lambdas, spec.k)
    x = [v * v for v in lam]
    half = degree // 2
    mom = moment_taylor(spec, half + 1)
    ker = kernel_taylor(spec, half)
    rows = []
    parts = []
    for d in range(half + 1):
        ms = {e: c for e, c in mom.items() if sum(e) == d}
        ks = {e: c for e, c in ker.items() if sum(e) == d}
        st = _s_eval(ms, x)
        kt = _s_eval(ks, x)
        ratio = None
        keys = set(ms) | set(ks)
        ratios = {ks.get(e, ZERO) / ms[e] for e in keys if ms.get(e)} if ms else set()
        if len(ratios) == 1 and all(e in ms for e in ks):
            ratio = ratios.pop()
        rows.append(DegreeRow(2 * d, st, kt, ms == ks, ratio))
        parts.append(st)
    tail = abs(_s_eval({e: c for e, c in mom.items() if sum(e) == half + 1}, x))
    return MomentCheck(math.fsum(parts), psi_hat(spec, lam).value, tail, rows)
