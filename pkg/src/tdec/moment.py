"""Moment functionals, monomial bases and quasi-Hankel matrices.

The central objects are the truncated moment functional of a tensor (its
coefficients divided by the matching multinomials) and the matrices
``H[i, j] = lam(rows[i] * cols[j])`` indexed by two monomial bases connected
to 1.  Entries whose monomial leaves the known multi-degree range are kept
as shared parameters, one per distinct monomial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DegreeOverflowError,
    Monomial,
    MomentFunctional,
    ParamExpr,
    Polynomial,
    Shape,
    ShapeMismatchError,
    monomial_multinomial,
)

DEFAULT_TOL_RANK = 1e-8
DEFAULT_MAX_COND = 1e10


class NoInvertibleBlockError(RuntimeError):
    """No fully known, well conditioned r x r block was found."""


class UnresolvedParameterError(RuntimeError):
    pass


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered monomial list, connected to 1 and duplicate-free."""

    shape: Shape
    monomials: tuple[Monomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "monomials", tuple(self.monomials))
        seen = set(self.monomials)
        if len(seen) != len(self.monomials):
            raise ValueError("duplicate monomials in basis")
        if self.shape.one() not in seen:
            raise ValueError("basis must contain the monomial 1")
        for m in self.monomials:
            if not m.is_one() and not any(
                m.divide(self.shape.variable(g, j)) in seen
                for (g, j) in m.variable_factors()
            ):
                raise ValueError(f"basis not connected to 1 at {m}")

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, i):
        return self.monomials[i]

    def index(self, m: Monomial) -> int:
        return self.monomials.index(m)

    def __contains__(self, m):
        return m in set(self.monomials)


def enumerate_monomials(shape: Shape, bounds: list[int]) -> list[Monomial]:
    """All monomials with per-group degree at most bounds[g], canonical order."""
    if len(bounds) != shape.k or any(b < 0 for b in bounds):
        raise ValueError("bounds must list one non-negative integer per group")
    per_group = []
    for n, b in zip(shape.dims, bounds):
        group = [
            e
            for e in itertools.product(range(b + 1), repeat=n)
            if sum(e) <= b
        ]
        per_group.append(group)
    monos = [Monomial(tuple(combo)) for combo in itertools.product(*per_group)]
    monos.sort(key=lambda m: m.sort_key())
    return monos


def basis_plus(B: MonomialBasis) -> MonomialBasis:
    """B+ = B union x*B over every variable, canonical order."""
    shape = B.shape
    out = set(B.monomials)
    for g, j in shape.variables():
        v = shape.variable(g, j)
        out.update(v * m for m in B.monomials)
    return MonomialBasis(shape, tuple(sorted(out, key=lambda m: m.sort_key())))


def border(B: MonomialBasis) -> list[Monomial]:
    """B+ \\ B in canonical order."""
    inside = set(B.monomials)
    return [m for m in basis_plus(B) if m not in inside]


def build_moment_functional(T: Polynomial) -> MomentFunctional:
    """Moments of a tensor: coefficient divided by the multinomial product.

    Every monomial inside the multi-degree bounds gets a known entry, zero
    coefficients included; nothing outside the bounds is recorded.
    """
    shape = T.shape
    if not T.within_bounds():
        raise DegreeOverflowError("tensor has terms beyond its degree bounds")
    entries = {}
    for m in enumerate_monomials(shape, list(shape.degrees)):
        entries[m] = T.coeff(m) / monomial_multinomial(shape, m)
    return MomentFunctional(shape, entries)


def functional_to_tensor(lam: MomentFunctional, shape: Shape) -> Polynomial:
    """Exact inverse of build_moment_functional on the degree-bounded range."""
    terms = {}
    for m in enumerate_monomials(shape, list(shape.degrees)):
        v = lam.entries.get(m)
        if v is None or isinstance(v, ParamExpr):
            raise UnresolvedParameterError(f"moment of {m} is unresolved")
        terms[m] = v * monomial_multinomial(shape, m)
    return Polynomial(shape, terms)


class HankelMatrix:
    """Matrix lam(rows[i] * cols[j]) with per-entry known/parametric flags."""

    def __init__(self, lam: MomentFunctional, rows: MonomialBasis, cols: MonomialBasis):
        if lam.shape != rows.shape or lam.shape != cols.shape:
            raise ShapeMismatchError("functional and bases shapes differ")
        self.rows = rows
        self.cols = cols
        dtype = complex if lam.uses_complex() else float
        values = np.zeros((len(rows), len(cols)), dtype=dtype)
        known = np.zeros((len(rows), len(cols)), dtype=bool)
        exprs: dict[tuple[int, int], ParamExpr] = {}
        for i, mr in enumerate(rows):
            for j, mc in enumerate(cols):
                v = lam.value(mr * mc)
                if isinstance(v, ParamExpr):
                    exprs[(i, j)] = v
                else:
                    values[i, j] = v
                    known[i, j] = True
        self.values = values
        self.known = known
        self.exprs = exprs

    @property
    def fully_known(self) -> bool:
        return bool(self.known.all())

    def numeric(self) -> np.ndarray:
        if not self.fully_known:
            raise UnresolvedParameterError("matrix has parametric entries")
        return self.values

    def entry(self, i: int, j: int):
        return self.exprs.get((i, j), self.values[i, j])

    @property
    def shape(self):
        return self.values.shape


def hankel(lam: MomentFunctional, rows: MonomialBasis, cols: MonomialBasis) -> HankelMatrix:
    return HankelMatrix(lam, rows, cols)


def shifted_hankel(
    lam: MomentFunctional,
    var: tuple[int, int],
    rows: MonomialBasis,
    cols: MonomialBasis,
) -> HankelMatrix:
    """Matrix of the shifted form: entry (i, j) = lam(x_var * rows[i] * cols[j])."""
    v = lam.shape.variable(*var)
    out = object.__new__(HankelMatrix)
    out.rows = rows
    out.cols = cols
    dtype = complex if lam.uses_complex() else float
    out.values = np.zeros((len(rows), len(cols)), dtype=dtype)
    out.known = np.zeros((len(rows), len(cols)), dtype=bool)
    out.exprs = {}
    for i, mr in enumerate(rows):
        for j, mc in enumerate(cols):
            val = lam.value(v * mr * mc)
            if isinstance(val, ParamExpr):
                out.exprs[(i, j)] = val
            else:
                out.values[i, j] = val
                out.known[i, j] = True
    return out


def numerical_rank(A: np.ndarray, tol_rank: float = DEFAULT_TOL_RANK) -> int:
    """Singular values above tol_rank * sigma_max count toward the rank."""
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def degree_splits(shape: Shape) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Column/row degree-bound pairs (beta, degrees - beta).

    Any pair of bases drawn from such pools has a fully known product block.
    Balanced splits come first (they leave the most known data around the
    block for the completion stage), then larger column sides, then
    lexicographic order, so the search is deterministic.
    """
    betas = list(itertools.product(*(range(d + 1) for d in shape.degrees)))
    betas.sort(
        key=lambda b: (
            sum(abs(2 * x - d) for x, d in zip(b, shape.degrees)),
            -sum(b),
            tuple(-x for x in b),
        )
    )
    return [
        (beta, tuple(d - x for d, x in zip(shape.degrees, beta)))
        for beta in betas
    ]


def catalecticant(
    lam: MomentFunctional,
    row_bounds: tuple[int, ...],
    col_bounds: tuple[int, ...],
) -> tuple[np.ndarray, list[Monomial], list[Monomial]]:
    """The full moment matrix between two degree-bounded monomial pools."""
    rows = enumerate_monomials(lam.shape, list(row_bounds))
    cols = enumerate_monomials(lam.shape, list(col_bounds))
    dtype = complex if lam.uses_complex() else float
    A = np.zeros((len(rows), len(cols)), dtype=dtype)
    for i, mr in enumerate(rows):
        for j, mc in enumerate(cols):
            A[i, j] = lam.known_value(mr * mc)
    return A, rows, cols


def _greedy_staircase(
    A: np.ndarray, monos: list[Monomial], shape: Shape, target: int,
    tol_rank: float, axis: int,
) -> list[int] | None:
    """Pick `target` columns (axis=1) or rows (axis=0) of A, scanning in
    canonical order, keeping the selection connected to 1 and accepting a
    monomial only when it raises the numerical rank."""
    selected: list[int] = []
    chosen: set[Monomial] = set()
    rank = 0
    for idx, m in enumerate(monos):
        if not m.is_one():
            if not any(
                m.divide(shape.variable(g, jj)) in chosen
                for (g, jj) in m.variable_factors()
            ):
                continue
        trial = selected + [idx]
        block = A[:, trial] if axis == 1 else A[trial, :]
        new_rank = numerical_rank(block, tol_rank)
        if new_rank > rank:
            selected = trial
            chosen.add(m)
            rank = new_rank
            if rank == target:
                return selected
    return None


def select_bases_candidates(
    lam: MomentFunctional,
    r: int,
    tol_rank: float = DEFAULT_TOL_RANK,
    max_cond: float = DEFAULT_MAX_COND,
):
    """Yield candidate basis pairs (B columns, B' rows) of size r, each with
    a fully known, invertible, well conditioned block lam(b' * b).

    Candidate pools come from complementary degree splits, so every product
    stays inside the known range; within a pool the staircase grows greedily
    in canonical order.
    """
    if r < 1:
        raise ValueError("r must be positive")
    shape = lam.shape
    for col_bounds, row_bounds in degree_splits(shape):
        A, rows, cols = catalecticant(lam, row_bounds, col_bounds)
        if min(A.shape) < r or numerical_rank(A, tol_rank) < r:
            continue
        col_sel = _greedy_staircase(A, cols, shape, r, tol_rank, axis=1)
        if col_sel is None:
            continue
        if row_bounds == col_bounds:
            row_sel = col_sel
        else:
            row_sel = _greedy_staircase(
                A[:, col_sel], rows, shape, r, tol_rank, axis=0
            )
        if row_sel is None:
            continue
        block = A[np.ix_(row_sel, col_sel)]
        if numerical_rank(block, tol_rank) < r or np.linalg.cond(block) > max_cond:
            continue
        B = MonomialBasis(shape, tuple(cols[i] for i in col_sel))
        Bp = MonomialBasis(shape, tuple(rows[i] for i in row_sel))
        yield B, Bp


def select_bases(
    lam: MomentFunctional,
    r: int,
    tol_rank: float = DEFAULT_TOL_RANK,
    max_cond: float = DEFAULT_MAX_COND,
) -> tuple[MonomialBasis, MonomialBasis]:
    """First candidate basis pair; NoInvertibleBlockError when none exists."""
    for B, Bp in select_bases_candidates(lam, r, tol_rank, max_cond):
        return B, Bp
    raise NoInvertibleBlockError(
        f"no fully known invertible {r} x {r} moment block; "
        "a random change of coordinates may help"
    )


def flattening_ranks(
    lam: MomentFunctional, tol_rank: float = DEFAULT_TOL_RANK
) -> dict[tuple[int, ...], int]:
    """Numerical rank of every degree-split moment matrix."""
    out = {}
    for col_bounds, row_bounds in degree_splits(lam.shape):
        A, _, _ = catalecticant(lam, row_bounds, col_bounds)
        out[col_bounds] = numerical_rank(A, tol_rank)
    return out
