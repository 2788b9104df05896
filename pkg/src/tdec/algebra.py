"""Multi-graded monomial/polynomial arithmetic and dual-space machinery.

Polynomials live in the dehomogenized multi-graded ring: variables come in
``k`` groups of sizes ``dims = (n_1, ..., n_k)``, and a polynomial of
multi-degree at most ``degrees = (d_1, ..., d_k)`` has, in each group ``g``,
total degree at most ``d_g``.  The homogenizing variable of each group is
implicit (set to 1).

The dual side is represented by ``MomentFunctional``: a partial map from
monomials to values.  Values may be plain scalars or affine expressions in
named parameters (``ParamExpr``), which is how not-yet-determined moments
propagate through linear operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

GROUP_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class ShapeMismatchError(ValueError):
    pass


class DegreeOverflowError(ValueError):
    pass


class UnknownProductError(ArithmeticError):
    """Raised when an operation would multiply two unknown parameters."""


@dataclass(frozen=True)
class Shape:
    """The multi-grading: group sizes (affine variables) and degrees."""

    dims: tuple[int, ...]
    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if len(self.dims) != len(self.degrees) or not self.dims:
            raise ValueError("dims and degrees must be non-empty and equally long")
        if any(n < 1 for n in self.dims) or any(d < 1 for d in self.degrees):
            raise ValueError("dims and degrees must be positive")

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def ambient_dim(self) -> int:
        """Number of coefficients of a full multi-graded polynomial."""
        return math.prod(
            math.comb(n + d, d) for n, d in zip(self.dims, self.degrees)
        )

    def variables(self) -> list[tuple[int, int]]:
        """All variable indices (group, slot), canonical order."""
        return [(g, j) for g in range(self.k) for j in range(self.dims[g])]

    def var_name(self, g: int, j: int) -> str:
        return f"{GROUP_LETTERS[g]}{j + 1}"

    def one(self) -> "Monomial":
        return Monomial(tuple((0,) * n for n in self.dims))

    def variable(self, g: int, j: int) -> "Monomial":
        exps = [[0] * n for n in self.dims]
        exps[g][j] = 1
        return Monomial(tuple(tuple(e) for e in exps))


@dataclass(frozen=True)
class Monomial:
    """Exponent vectors, one per variable group."""

    exps: tuple[tuple[int, ...], ...]

    def group_degree(self, g: int) -> int:
        return sum(self.exps[g])

    def degrees(self) -> tuple[int, ...]:
        return tuple(sum(e) for e in self.exps)

    @property
    def total_degree(self) -> int:
        return sum(sum(e) for e in self.exps)

    def is_one(self) -> bool:
        return self.total_degree == 0

    def within(self, shape: Shape) -> bool:
        """True when the monomial lies inside the multi-degree bounds."""
        return all(
            len(e) == n and sum(e) <= d
            for e, n, d in zip(self.exps, shape.dims, shape.degrees)
        )

    def __mul__(self, other: "Monomial") -> "Monomial":
        if len(self.exps) != len(other.exps) or any(
            len(a) != len(b) for a, b in zip(self.exps, other.exps)
        ):
            raise ShapeMismatchError("monomials of different shapes")
        return Monomial(
            tuple(
                tuple(x + y for x, y in zip(a, b))
                for a, b in zip(self.exps, other.exps)
            )
        )

    def divides(self, other: "Monomial") -> bool:
        return all(
            x <= y
            for a, b in zip(self.exps, other.exps)
            for x, y in zip(a, b)
        )

    def divide(self, other: "Monomial") -> "Monomial":
        """self / other; requires other | self."""
        if not other.divides(self):
            raise ValueError(f"{other} does not divide {self}")
        return Monomial(
            tuple(
                tuple(x - y for x, y in zip(a, b))
                for a, b in zip(self.exps, other.exps)
            )
        )

    def lcm(self, other: "Monomial") -> "Monomial":
        return Monomial(
            tuple(
                tuple(max(x, y) for x, y in zip(a, b))
                for a, b in zip(self.exps, other.exps)
            )
        )

    def gcd(self, other: "Monomial") -> "Monomial":
        return Monomial(
            tuple(
                tuple(min(x, y) for x, y in zip(a, b))
                for a, b in zip(self.exps, other.exps)
            )
        )

    def variable_factors(self) -> list[tuple[int, int]]:
        """Variables (group, slot) dividing the monomial."""
        return [
            (g, j)
            for g, e in enumerate(self.exps)
            for j, x in enumerate(e)
            if x > 0
        ]

    def sort_key(self):
        """Graded order, group-major lexicographic within a degree."""
        flat = tuple(x for e in self.exps for x in e)
        return (self.total_degree, tuple(-x for x in flat))

    def __str__(self) -> str:
        if self.is_one():
            return "1"
        parts = []
        for g, e in enumerate(self.exps):
            for j, x in enumerate(e):
                if x == 1:
                    parts.append(f"{GROUP_LETTERS[g]}{j + 1}")
                elif x > 1:
                    parts.append(f"{GROUP_LETTERS[g]}{j + 1}^{x}")
        return "*".join(parts)

    @staticmethod
    def parse(text: str, shape: Shape) -> "Monomial":
        """Inverse of str(): e.g. "a1*b3^2" -> Monomial."""
        exps = [[0] * n for n in shape.dims]
        text = text.strip()
        if text != "1":
            for factor in text.split("*"):
                name, _, power = factor.partition("^")
                g = GROUP_LETTERS.index(name[0])
                j = int(name[1:]) - 1
                exps[g][j] += int(power) if power else 1
        return Monomial(tuple(tuple(e) for e in exps))


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    """Componentwise exponent sum."""
    return a * b


def multinomial(degree: int, alpha: Iterable[int]) -> int:
    """degree! / (alpha_1! ... alpha_n! (degree - |alpha|)!), exact."""
    alpha = tuple(alpha)
    rest = degree - sum(alpha)
    if rest < 0:
        raise DegreeOverflowError(f"|{alpha}| exceeds degree {degree}")
    num = math.factorial(degree)
    den = math.prod(math.factorial(x) for x in alpha) * math.factorial(rest)
    return num // den


def monomial_multinomial(shape: Shape, m: Monomial) -> int:
    """Product of per-group multinomials C(d_g, alpha_g)."""
    return math.prod(
        multinomial(d, e) for d, e in zip(shape.degrees, m.exps)
    )


@dataclass(frozen=True)
class Point:
    """Affine evaluation point, one coordinate vector per group."""

    coords: tuple[tuple[complex, ...], ...]

    def coord(self, g: int, j: int) -> complex:
        return self.coords[g][j]

    def eval_monomial(self, m: Monomial) -> complex:
        val = 1.0
        for c, e in zip(self.coords, m.exps):
            for x, power in zip(c, e):
                if power:
                    val *= x**power
        return val

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(
            abs(complex(x).imag) <= tol for c in self.coords for x in c
        )

    def real(self) -> "Point":
        return Point(tuple(tuple(complex(x).real for x in c) for c in self.coords))


class Polynomial:
    """Sparse multi-graded polynomial: shape plus monomial -> coefficient."""

    __slots__ = ("shape", "terms")

    def __init__(self, shape: Shape, terms: dict[Monomial, complex] | None = None):
        self.shape = shape
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.shape == other.shape
            and self.terms == other.terms
        )

    def coeff(self, m: Monomial) -> complex:
        return self.terms.get(m, 0)

    def within_bounds(self) -> bool:
        return all(m.within(self.shape) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self, tol: float = 1e-12) -> bool:
        """Negligible imaginary parts (values, not storage types)."""
        return all(abs(complex(c).imag) <= tol for c in self.terms.values())

    def uses_complex(self) -> bool:
        """Any coefficient stored as a complex type; drives array dtypes."""
        return any(isinstance(c, complex) for c in self.terms.values())

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if self.shape != other.shape:
            raise ShapeMismatchError("polynomial shapes differ")
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(self.shape, terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (other * -1)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.shape, {m: c * other for m, c in self.terms.items()})
        if self.shape != other.shape:
            raise ShapeMismatchError("polynomial shapes differ")
        terms: dict[Monomial, complex] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial(self.shape, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        result = Polynomial(self.shape, {self.shape.one(): 1})
        for _ in range(n):
            result = result * self
        return result

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda t: t[0].sort_key())
        return " + ".join(f"{c}*{m}" for m, c in items)


class ParamExpr:
    """Affine expression ``const + sum coeff_p * p`` in named parameters.

    Parameters are identified by the unknown monomial they stand for, which
    makes parameter sharing across quasi-Hankel entries automatic.  Products
    of two expressions with parameters are refused: everything downstream of
    the algebra layer is kept linear in the unknowns.
    """

    __slots__ = ("const", "coeffs")

    def __init__(self, const: complex = 0.0, coeffs: dict | None = None):
        self.const = const
        self.coeffs = {p: c for p, c in (coeffs or {}).items() if c != 0}

    @staticmethod
    def parameter(pid) -> "ParamExpr":
        return ParamExpr(0.0, {pid: 1.0})

    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        if not isinstance(other, ParamExpr):
            return ParamExpr(self.const + other, dict(self.coeffs))
        coeffs = dict(self.coeffs)
        for p, c in other.coeffs.items():
            coeffs[p] = coeffs.get(p, 0) + c
        return ParamExpr(self.const + other.const, coeffs)

    __radd__ = __add__

    def __mul__(self, scalar):
        if isinstance(scalar, ParamExpr):
            if self.is_const():
                return scalar * self.const
            if scalar.is_const():
                return self * scalar.const
            raise UnknownProductError("product of two unknown expressions")
        return ParamExpr(
            self.const * scalar, {p: c * scalar for p, c in self.coeffs.items()}
        )

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other

    def __repr__(self):
        parts = [f"{self.const}"] + [f"{c}*h[{p}]" for p, c in self.coeffs.items()]
        return " + ".join(parts)


def as_value(x):
    """Collapse a constant ParamExpr to its scalar."""
    if isinstance(x, ParamExpr) and x.is_const():
        return x.const
    return x


class MomentFunctional:
    """Partial linear form on the monomials: monomial -> scalar or ParamExpr.

    Monomials absent from ``entries`` are unknown; ``value(m)`` materializes
    them as fresh parameters named by the monomial itself.
    """

    __slots__ = ("shape", "entries")

    def __init__(self, shape: Shape, entries: dict | None = None):
        self.shape = shape
        self.entries = dict(entries or {})

    def known(self, m: Monomial) -> bool:
        v = self.entries.get(m)
        return v is not None and not isinstance(v, ParamExpr)

    def value(self, m: Monomial):
        """Value at a monomial; unknown entries become parameters."""
        v = self.entries.get(m)
        if v is None:
            return ParamExpr.parameter(m)
        return v

    def known_value(self, m: Monomial) -> complex:
        if not self.known(m):
            raise KeyError(f"moment of {m} is unknown")
        return self.entries[m]

    def set(self, m: Monomial, value) -> None:
        self.entries[m] = value

    def apply(self, p: Polynomial):
        """Evaluate the functional on a polynomial (linear extension)."""
        total = 0.0
        for m, c in p.terms.items():
            total = total + c * self.value(m)
        return as_value(total)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(
            abs(complex(v).imag) <= tol
            for v in self.entries.values()
            if not isinstance(v, ParamExpr)
        )

    def uses_complex(self) -> bool:
        return any(
            isinstance(v, complex)
            for v in self.entries.values()
            if not isinstance(v, ParamExpr)
        )

    def copy(self) -> "MomentFunctional":
        return MomentFunctional(self.shape, dict(self.entries))


def star_action(
    p: Polynomial, lam: MomentFunctional, domain: list[Monomial]
) -> MomentFunctional:
    """The module action p * lam: q -> lam(p q), on the requested domain.

    Unknown moments propagate as affine parameter expressions.
    """
    if p.shape != lam.shape:
        raise ShapeMismatchError("polynomial and functional shapes differ")
    out: dict[Monomial, object] = {}
    for q in domain:
        total = 0.0
        for m, c in p.terms.items():
            total = total + c * lam.value(m * q)
        out[q] = as_value(total)
    return MomentFunctional(lam.shape, out)


def evaluation_functional(
    zeta: Point, shape: Shape, domain: list[Monomial]
) -> MomentFunctional:
    """The evaluation form 1_zeta: m -> m(zeta), on the given domain."""
    if tuple(len(c) for c in zeta.coords) != shape.dims:
        raise ShapeMismatchError("point does not match shape")
    return MomentFunctional(shape, {m: zeta.eval_monomial(m) for m in domain})


def weighted_evaluation(
    weights: Iterable[complex], points: Iterable[Point], shape: Shape,
    domain: list[Monomial],
) -> MomentFunctional:
    """The rank-r form sum_i gamma_i 1_{zeta_i} on the given domain."""
    weights = list(weights)
    points = list(points)
    entries = {}
    for m in domain:
        entries[m] = sum(
            w * z.eval_monomial(m) for w, z in zip(weights, points)
        )
    return MomentFunctional(shape, entries)


def apolar_pairing(f: Polynomial, g: Polynomial) -> complex:
    """sum_a f_a g_a C(d_1,a_1)...C(d_k,a_k) over the shared shape."""
    if f.shape != g.shape:
        raise ShapeMismatchError("polynomial shapes differ")
    shape = f.shape
    for p in (f, g):
        for m in p.terms:
            if not m.within(shape):
                raise DegreeOverflowError(f"{m} exceeds degrees {shape.degrees}")
    total = 0.0
    for m, c in f.terms.items():
        cg = g.terms.get(m)
        if cg is not None:
            total += c * cg * monomial_multinomial(shape, m)
    return total


def evaluate_poly(p: Polynomial, zeta: Point) -> complex:
    """Plain evaluation with the homogenizing coordinates set to 1."""
    if tuple(len(c) for c in zeta.coords) != p.shape.dims:
        raise ShapeMismatchError("point does not match polynomial shape")
    return sum(c * zeta.eval_monomial(m) for m, c in p.terms.items())
