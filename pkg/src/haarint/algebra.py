"""Exact scalars, sparse multivariate polynomials and the real coordinate layout.

Rationals are ``gmpy2.mpq`` values (always reduced, positive denominator).
Gaussian rationals are a thin pair of them.  A :class:`Polynomial` maps
monomials to :class:`GaussRational` coefficients; a monomial is a tuple of
``(coordinate, exponent)`` pairs sorted by coordinate, with no zero exponents.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

Rational = type(mpq(0))
Monomial = tuple  # tuple[tuple[int, int], ...]

ZERO = mpq(0)
ONE = mpq(1)


def rational(x) -> Rational:
    """Coerce ints, fractions, mpq or ``"p/q"`` strings to an exact rational."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, str):
        return parse_rational(x, strict=False)
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact rationals")
    return mpq(x)


def parse_rational(text: str, strict: bool = True) -> Rational:
    """Parse ``"p"`` or ``"p/q"``; with ``strict`` the fraction must be reduced."""
    s = text.strip()
    if "/" in s:
        num_s, den_s = s.split("/", 1)
        try:
            num, den = int(num_s), int(den_s)
        except ValueError as exc:
            raise ValueError(f"malformed rational {text!r}") from exc
        if den <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        if strict and math.gcd(num, den) != 1:
            raise ValueError(f"rational {text!r} is not in lowest terms")
        if strict and den == 1:
            raise ValueError(f"rational {text!r} should be written without denominator")
        return mpq(num, den)
    try:
        return mpq(int(s))
    except ValueError as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


def format_rational(q) -> str:
    q = rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class GaussRational:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = rational(re)
        self.im = rational(im)

    @staticmethod
    def coerce(x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, complex):
            raise TypeError("complex floats are not exact")
        return GaussRational(rational(x), ZERO)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def conjugate(self) -> "GaussRational":
        return GaussRational(self.re, -self.im)

    def __add__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __mul__(self, other):
        o = GaussRational.coerce(other)
        if self.im == 0 and o.im == 0:
            return GaussRational(self.re * o.re, ZERO)
        return GaussRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRational.coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("division by zero Gaussian rational")
        den = o.re * o.re + o.im * o.im
        num = self * o.conjugate()
        return GaussRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return GaussRational.coerce(other) / self

    def __eq__(self, other):
        try:
            o = GaussRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"GaussRational({format_rational(self.re)})"
        return f"GaussRational({format_rational(self.re)}, {format_rational(self.im)})"


@dataclass(frozen=True)
class CoordLayout:
    """Real coordinates of n-by-k matrices over R, C or H.

    Flat index of (column c, real component l, row r) is ``c*beta*n + l*n + r``,
    so each column is a contiguous block of ``beta*n`` coordinates.
    """

    beta: int
    n: int
    k: int

    def __post_init__(self):
        if self.beta not in (1, 2, 4):
            raise ValueError(f"beta must be 1, 2 or 4, got {self.beta}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def dim(self) -> int:
        return self.beta * self.n * self.k

    @property
    def column_size(self) -> int:
        return self.beta * self.n

    def index(self, c: int, l: int, r: int) -> int:
        if not (0 <= c < self.k and 0 <= l < self.beta and 0 <= r < self.n):
            raise IndexError(f"coordinate ({c},{l},{r}) outside layout {self}")
        return c * self.beta * self.n + l * self.n + r

    def coords(self, idx: int) -> tuple[int, int, int]:
        if not 0 <= idx < self.dim:
            raise IndexError(f"flat index {idx} outside layout {self}")
        c, rest = divmod(idx, self.beta * self.n)
        l, r = divmod(rest, self.n)
        return c, l, r

    def column(self, c: int) -> range:
        if not 0 <= c < self.k:
            raise IndexError(f"column {c} outside layout {self}")
        start = c * self.beta * self.n
        return range(start, start + self.beta * self.n)


# ---------------------------------------------------------------- monomials


def mono(exps: Mapping[int, int] | Iterable[tuple[int, int]]) -> Monomial:
    items = exps.items() if isinstance(exps, Mapping) else exps
    return tuple(sorted((int(i), int(e)) for i, e in items if e))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for i, e in b:
        d[i] = d.get(i, 0) + e
    return tuple(sorted(d.items()))


def mono_key(m: Monomial):
    """Graded lexicographic sort key (coordinate 0 is the most significant)."""
    return (mono_degree(m), tuple((i, -e) for i, e in m))


# --------------------------------------------------------------- polynomials


def _gauss_dict(re: Mapping, im: Mapping | None = None) -> dict:
    out = {}
    if im is None:
        for m, c in re.items():
            if c:
                out[m] = GaussRational(c, ZERO)
        return out
    for m in set(re) | set(im):
        r = re.get(m, ZERO)
        i = im.get(m, ZERO)
        if r or i:
            out[m] = GaussRational(r, i)
    return out


class Polynomial:
    """Immutable sparse polynomial with Gaussian-rational coefficients."""

    __slots__ = ("layout", "_terms", "_real")

    def __init__(self, layout: CoordLayout, terms: Mapping | None = None):
        self.layout = layout
        clean = {}
        if terms:
            dim = layout.dim
            for m, c in terms.items():
                m = mono(m) if not isinstance(m, tuple) else m
                for i, e in m:
                    if not 0 <= i < dim:
                        raise IndexError(f"coordinate {i} outside layout of dim {dim}")
                    if e < 0:
                        raise ValueError("negative exponent")
                g = GaussRational.coerce(c)
                if not g.is_zero():
                    prev = clean.get(m)
                    g = g if prev is None else prev + g
                    if g.is_zero():
                        del clean[m]
                    else:
                        clean[m] = g
        self._terms = clean
        self._real = all(c.im == 0 for c in clean.values())

    # constructors ---------------------------------------------------------
    @classmethod
    def _trusted(cls, layout: CoordLayout, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.layout = layout
        p._terms = terms
        p._real = all(c.im == 0 for c in terms.values())
        return p

    @classmethod
    def from_rational_dict(cls, layout: CoordLayout, re: Mapping, im: Mapping | None = None):
        return cls._trusted(layout, _gauss_dict(re, im))

    @classmethod
    def zero(cls, layout: CoordLayout) -> "Polynomial":
        return cls._trusted(layout, {})

    @classmethod
    def const(cls, layout: CoordLayout, c=1) -> "Polynomial":
        return cls(layout, {(): c})

    @classmethod
    def var(cls, layout: CoordLayout, idx: int) -> "Polynomial":
        if not 0 <= idx < layout.dim:
            raise IndexError(f"coordinate {idx} outside layout of dim {layout.dim}")
        return cls._trusted(layout, {((idx, 1),): GaussRational(ONE)})

    @classmethod
    def monomial(cls, layout: CoordLayout, exps, c=1) -> "Polynomial":
        return cls(layout, {mono(exps): c})

    # inspection -----------------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, GaussRational]:
        return self._terms

    def is_real(self) -> bool:
        return self._real

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Monomial, GaussRational]]:
        return iter(self._terms.items())

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((mono_degree(m) for m in self._terms), default=-1)

    def min_degree(self) -> int:
        return min((mono_degree(m) for m in self._terms), default=-1)

    def constant_term(self) -> GaussRational:
        return self._terms.get((), GaussRational(ZERO))

    def coefficient(self, exps) -> GaussRational:
        return self._terms.get(mono(exps), GaussRational(ZERO))

    def sorted_terms(self) -> list[tuple[Monomial, GaussRational]]:
        return sorted(self._terms.items(), key=lambda t: mono_key(t[0]))

    def variables(self) -> set[int]:
        return {i for m in self._terms for i, _ in m}

    def homogeneous_part(self, d: int) -> "Polynomial":
        return Polynomial._trusted(
            self.layout, {m: c for m, c in self._terms.items() if mono_degree(m) == d}
        )

    def homogeneous_parts(self) -> dict[int, "Polynomial"]:
        parts: dict[int, dict] = {}
        for m, c in self._terms.items():
            parts.setdefault(mono_degree(m), {})[m] = c
        return {d: Polynomial._trusted(self.layout, t) for d, t in parts.items()}

    def truncate(self, max_degree: int) -> "Polynomial":
        return Polynomial._trusted(
            self.layout, {m: c for m, c in self._terms.items() if mono_degree(m) <= max_degree}
        )

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if self.layout != other.layout:
            raise ValueError(f"layout mismatch: {self.layout} vs {other.layout}")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.const(self.layout, other)

    def __add__(self, other):
        o = self._lift(other)
        out = dict(self._terms)
        for m, c in o._terms.items():
            prev = out.get(m)
            if prev is None:
                out[m] = c
            else:
                s = prev + c
                if s.is_zero():
                    del out[m]
                else:
                    out[m] = s
        return Polynomial._trusted(self.layout, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._trusted(self.layout, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "Polynomial":
        g = GaussRational.coerce(c)
        if g.is_zero():
            return Polynomial.zero(self.layout)
        if g.im == 0 and self._real:
            return Polynomial._trusted(
                self.layout, {m: GaussRational(v.re * g.re, ZERO) for m, v in self._terms.items()}
            )
        return Polynomial._trusted(self.layout, {m: v * g for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        if self._real and other._real:
            acc: dict = {}
            for m1, c1 in self._terms.items():
                r1 = c1.re
                for m2, c2 in other._terms.items():
                    m = mono_mul(m1, m2)
                    acc[m] = acc.get(m, ZERO) + r1 * c2.re
            return Polynomial.from_rational_dict(self.layout, acc)
        re: dict = {}
        im: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = mono_mul(m1, m2)
                re[m] = re.get(m, ZERO) + c1.re * c2.re - c1.im * c2.im
                im[m] = im.get(m, ZERO) + c1.re * c2.im + c1.im * c2.re
        return Polynomial.from_rational_dict(self.layout, re, im)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power")
        result = Polynomial.const(self.layout, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def conjugate(self) -> "Polynomial":
        return Polynomial._trusted(self.layout, {m: c.conjugate() for m, c in self._terms.items()})

    def real_part(self) -> "Polynomial":
        return Polynomial.from_rational_dict(self.layout, {m: c.re for m, c in self._terms.items()})

    def imag_part(self) -> "Polynomial":
        return Polynomial.from_rational_dict(self.layout, {m: c.im for m, c in self._terms.items()})

    def diff(self, coord: int) -> "Polynomial":
        return poly_diff(self, coord)

    def map_monomials(self, fn: Callable[[Monomial], tuple[Monomial, object]]) -> "Polynomial":
        """Rebuild with ``fn(m) -> (m', factor)`` applied to every monomial."""
        re: dict = {}
        im: dict = {}
        for m, c in self._terms.items():
            m2, factor = fn(m)
            if not factor:
                continue
            f = rational(factor)
            re[m2] = re.get(m2, ZERO) + c.re * f
            if c.im:
                im[m2] = im.get(m2, ZERO) + c.im * f
        return Polynomial.from_rational_dict(self.layout, re, im if im else None)

    def relabel(self, layout: CoordLayout, mapping: Mapping[int, int] | Sequence[int]) -> "Polynomial":
        """Rename coordinates ``i -> mapping[i]`` into another layout."""
        out: dict = {}
        for m, c in self._terms.items():
            d: dict = {}
            for i, e in m:
                j = mapping[i]
                d[j] = d.get(j, 0) + e
            key = tuple(sorted(d.items()))
            prev = out.get(key)
            out[key] = c if prev is None else prev + c
        return Polynomial(layout, out)

    def eval(self, point: Sequence[float]) -> complex:
        return poly_eval(self, point)

    def eval_exact(self, point: Sequence) -> GaussRational:
        """Exact evaluation at a point of rationals."""
        pt = [rational(x) for x in point]
        re = ZERO
        im = ZERO
        for m, c in self._terms.items():
            v = ONE
            for i, e in m:
                v *= pt[i] ** e
            re += c.re * v
            im += c.im * v
        return GaussRational(re, im)

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.layout == other.layout and self._terms == other._terms
        try:
            return self == Polynomial.const(self.layout, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.layout, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            cs = (
                format_rational(c.re)
                if c.im == 0
                else f"({format_rational(c.re)}{'+' if c.im >= 0 else '-'}{format_rational(abs(c.im))}i)"
            )
            ms = "*".join(f"x{i}" if e == 1 else f"x{i}^{e}" for i, e in m)
            parts.append(cs if not ms else (ms if cs == "1" else f"{cs}*{ms}"))
        return " + ".join(parts)


# -------------------------------------------------------- named operations


def poly_arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout} vs {b.layout}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def poly_diff(f: Polynomial, coord: int) -> Polynomial:
    if not 0 <= coord < f.layout.dim:
        raise IndexError(f"coordinate {coord} outside layout of dim {f.layout.dim}")
    out: dict = {}
    for m, c in f.terms.items():
        for pos, (i, e) in enumerate(m):
            if i == coord:
                m2 = m[:pos] + (((i, e - 1),) if e > 1 else ()) + m[pos + 1 :]
                out[m2] = c * e
                break
    return Polynomial._trusted(f.layout, out)


def poly_eval(f: Polynomial, point: Sequence[float]) -> complex:
    """Direct term-by-term evaluation with compensated (fsum) summation."""
    if len(point) != f.layout.dim:
        raise ValueError(f"point has length {len(point)}, layout needs {f.layout.dim}")
    re_parts = []
    im_parts = []
    for m, c in f.sorted_terms():
        v = 1.0
        for i, e in m:
            v *= float(point[i]) ** e
        re_parts.append(float(c.re) * v)
        if c.im:
            im_parts.append(float(c.im) * v)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def poly_serialize(f: Polynomial) -> str:
    terms = []
    for m, c in f.sorted_terms():
        if c.im == 0:
            cs: object = format_rational(c.re)
        else:
            cs = {"re": format_rational(c.re), "im": format_rational(c.im)}
        terms.append({"m": {str(i): str(e) for i, e in m}, "c": cs})
    lay = f.layout
    doc = {"layout": {"beta": lay.beta, "n": lay.n, "k": lay.k}, "terms": terms}
    return json.dumps(doc, separators=(",", ":"))


def poly_parse(text: str, layout: CoordLayout | None = None) -> Polynomial:
    """Parse the JSON polynomial format.

    The layout comes from the document, else from ``layout``, else the
    smallest single-column real layout holding every coordinate.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed polynomial JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("terms"), list):
        raise ValueError("polynomial JSON needs a 'terms' list")
    raw: list[tuple[Monomial, GaussRational]] = []
    for t in doc["terms"]:
        if not isinstance(t, dict) or "m" not in t or "c" not in t:
            raise ValueError(f"malformed term {t!r}")
        exps = {}
        for i_s, e_s in t["m"].items():
            i, e = int(i_s), int(e_s)
            if e < 0:
                raise ValueError("negative exponent")
            if i < 0:
                raise ValueError("negative coordinate index")
            exps[i] = e
        c = t["c"]
        if isinstance(c, dict):
            g = GaussRational(parse_rational(c["re"]), parse_rational(c["im"]))
        elif isinstance(c, str):
            g = GaussRational(parse_rational(c))
        elif isinstance(c, int) and not isinstance(c, bool):
            g = GaussRational(c)
        else:
            raise ValueError(f"malformed coefficient {c!r}")
        raw.append((mono(exps), g))
    if "layout" in doc:
        lay = doc["layout"]
        layout = CoordLayout(int(lay["beta"]), int(lay["n"]), int(lay["k"]))
    elif layout is None:
        top = max((i for m, _ in raw for i, _ in m), default=0)
        layout = CoordLayout(1, top + 1, 1)
    acc: dict = {}
    for m, g in raw:
        acc[m] = acc[m] + g if m in acc else g
    return Polynomial(layout, acc)


# ------------------------------------------------------ random polynomials


def random_polynomial(
    layout: CoordLayout,
    degree: int,
    rng: random.Random,
    n_terms: int = 4,
    pairings: Sequence[Sequence[tuple[int, int, int]]] = (),
) -> Polynomial:
    """Random polynomial of total degree at most ``degree``.

    Terms mix plain random monomials with products of quadratic factors
    ``x_a x_b`` so that plenty of them survive invariant integration.
    ``pairings`` optionally lists signed coordinate pairs ``(a, b, sign)``
    (e.g. the entries of a J-matrix between two columns) used as extra
    quadratic building blocks.
    """
    dim = layout.dim
    terms: dict = {}
    for _ in range(n_terms):
        d = rng.randint(0, degree)
        exps: dict[int, int] = {}
        sign = 1
        kind = rng.random()
        if kind < 0.25:
            for _ in range(d):
                i = rng.randrange(dim)
                exps[i] = exps.get(i, 0) + 1
        else:
            for _ in range(d // 2):
                if pairings and rng.random() < 0.5:
                    block = rng.choice(pairings)
                    a, b, s = block[rng.randrange(len(block))]
                    sign *= s
                else:
                    a = rng.randrange(dim)
                    b = a if rng.random() < 0.6 else rng.randrange(dim)
                exps[a] = exps.get(a, 0) + 1
                exps[b] = exps.get(b, 0) + 1
            if d % 2 and rng.random() < 0.3:
                i = rng.randrange(dim)
                exps[i] = exps.get(i, 0) + 1
        num = rng.randint(-9, 9) or 1
        den = rng.randint(1, 6)
        m = mono(exps)
        terms[m] = terms.get(m, ZERO) + mpq(sign * num, den)
    return Polynomial(layout, terms)


# ----------------------------------------------------------- exact division


def _shift(m: Monomial, idx: int, by: int) -> Monomial:
    d = dict(m)
    d[idx] = d.get(idx, 0) + by
    if d[idx] == 0:
        del d[idx]
    return tuple(sorted(d.items()))


def divide_by_difference(f: Polynomial, a: int, b: int) -> Polynomial:
    """Exact quotient ``f / (x_a - x_b)``; raises if the division leaves a remainder.

    Synthetic division in ``x_a`` with coefficients that are polynomials in
    the remaining variables.
    """
    if a == b:
        raise ValueError("need two distinct coordinates")
    by_deg: dict[int, dict] = {}
    for m, c in f.terms.items():
        e = dict(m).get(a, 0)
        rest = _shift(m, a, -e) if e else m
        by_deg.setdefault(e, {})[rest] = c
    if not by_deg:
        return Polynomial.zero(f.layout)
    top = max(by_deg)
    quotient: dict = {}
    carry: dict = {}  # q_e as dict (monomials without x_a)
    for e in range(top, 0, -1):
        # q_{e-1} = c_e + x_b * q_e
        nxt = dict(by_deg.get(e, {}))
        for m, c in carry.items():
            m2 = _shift(m, b, 1)
            s = nxt[m2] + c if m2 in nxt else c
            if s.is_zero():
                nxt.pop(m2, None)
            else:
                nxt[m2] = s
        carry = nxt
        for m, c in carry.items():
            quotient[_shift(m, a, e - 1) if e > 1 else m] = c
    rem = dict(by_deg.get(0, {}))
    for m, c in carry.items():
        m2 = _shift(m, b, 1)
        s = rem[m2] + c if m2 in rem else c
        if s.is_zero():
            rem.pop(m2, None)
        else:
            rem[m2] = s
    if rem:
        raise ArithmeticError(f"polynomial is not divisible by x{a} - x{b}")
    return Polynomial._trusted(f.layout, quotient)
