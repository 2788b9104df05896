"""Multiplication operators, joint eigenvectors, roots and weights.

A completed functional with basis B and invertible block H yields one
multiplication table per variable; their transposes share eigenvectors, and
each eigenvector is (up to scale) the vector of values of B at one root.
Coordinates are read off eigenvector entries and eigenvalues, weights come
from a Vandermonde-type fit against the tensor coefficients, and coordinates
of variables without a table are recovered afterwards through one more
linear solve against the weighted evaluations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import Monomial, MomentFunctional, Point, Polynomial, Shape
from .extension import SingularBlockError
from .moment import (
    MonomialBasis,
    UnresolvedParameterError,
    build_moment_functional,
    enumerate_monomials,
    hankel,
    numerical_rank,
    shifted_hankel,
)

log = logging.getLogger("tdec")

SIMPLE_GAP_TOL = 1e-6
EIG_RETRY_GAP = 1e-10


class WeightSolveError(RuntimeError):
    pass


class CoordinateRecoveryError(RuntimeError):
    pass


def multiplication_matrix(
    lam: MomentFunctional,
    B: MonomialBasis,
    Bp: MonomialBasis,
    var: tuple[int, int],
) -> np.ndarray:
    """Table of multiplication by x_var on the basis B, via the row basis B'."""
    H = hankel(lam, Bp, B)
    Hs = shifted_hankel(lam, var, Bp, B)
    if not (H.fully_known and Hs.fully_known):
        raise UnresolvedParameterError("shifted moments are unresolved")
    Hn = H.numeric()
    if numerical_rank(Hn) < len(B):
        raise SingularBlockError("base block is singular")
    return np.linalg.solve(Hn, Hs.numeric())


@dataclass
class MultiplicationFamily:
    basis: MonomialBasis
    matrices: dict[tuple[int, int], np.ndarray]

    def variables(self) -> list[tuple[int, int]]:
        return sorted(self.matrices)


def family_from_functional(
    lam: MomentFunctional,
    B: MonomialBasis,
    Bp: MonomialBasis,
    variables=None,
) -> MultiplicationFamily:
    """Tables for every requested variable with fully resolved shifts."""
    mats = {}
    for var in variables if variables is not None else lam.shape.variables():
        try:
            mats[var] = multiplication_matrix(lam, B, Bp, var)
        except UnresolvedParameterError:
            continue
    return MultiplicationFamily(B, mats)


@dataclass
class RootSet:
    shape: Shape
    basis: MonomialBasis
    eigvecs: list[np.ndarray]
    eigenvalues: dict[tuple[int, int], np.ndarray]
    simple: bool
    points: list[Point] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.eigvecs)


def joint_eigenvectors(
    family: MultiplicationFamily, seed: int = 0
) -> RootSet:
    """Common eigenvectors of the transposed family via one random mix.

    The eigenvectors are normalized so the coordinate on the monomial 1 is
    one; per-variable eigenvalues are Rayleigh quotients.  ``simple`` is
    False when eigenvalue tuples collide or the mix is defective.
    """
    B = family.basis
    if not B[0].is_one():
        raise ValueError("basis must list the monomial 1 first")
    if not family.matrices:
        raise ValueError("empty multiplication family")
    variables = family.variables()
    mats = [family.matrices[v].T for v in variables]
    r = len(B)
    rng = np.random.default_rng(seed)
    complex_data = any(np.iscomplexobj(M) for M in mats)

    vals = vecs = None
    for _ in range(2):  # one retry with a fresh draw on tiny gaps
        if complex_data:
            radius = np.sqrt(rng.uniform(0.0, 1.0, len(mats)))
            t = radius * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, len(mats)))
        else:
            t = rng.uniform(-1.0, 1.0, len(mats))
        A = sum(tv * M for tv, M in zip(t, mats))
        vals, vecs = np.linalg.eig(A)
        if r == 1:
            break
        gaps = min(
            abs(vals[i] - vals[j])
            for i in range(r)
            for j in range(i + 1, r)
        )
        if gaps > EIG_RETRY_GAP * (1.0 + np.abs(vals).max()):
            break

    defective = numerical_rank(vecs, 1e-8) < r
    eigvecs = []
    degenerate = False
    for i in range(r):
        w = vecs[:, i]
        if abs(w[0]) < 1e-12 * np.linalg.norm(w):
            degenerate = True
            eigvecs.append(w)
            continue
        eigvecs.append(w / w[0])

    eigenvalues = {}
    eig_residual = 0.0
    for v, M in zip(variables, mats):
        lam_v = np.empty(r, dtype=complex)
        for i, w in enumerate(eigvecs):
            lam_v[i] = (w.conj() @ (M @ w)) / (w.conj() @ w)
            eig_residual = max(
                eig_residual,
                np.linalg.norm(M @ w - lam_v[i] * w)
                / max(1.0, np.linalg.norm(M) * np.linalg.norm(w)),
            )
        eigenvalues[v] = lam_v

    # joint eigenvalue tuples must be pairwise distinct
    tuples = np.array([eigenvalues[v] for v in variables]).T if variables else np.zeros((r, 0))
    scale = 1.0 + (np.abs(tuples).max() if tuples.size else 0.0)
    collision = False
    for i in range(r):
        for j in range(i + 1, r):
            if tuples.size and np.abs(tuples[i] - tuples[j]).max() <= SIMPLE_GAP_TOL * scale:
                collision = True
    simple = not (defective or degenerate or collision)
    return RootSet(
        shape=B.shape,
        basis=B,
        eigvecs=eigvecs,
        eigenvalues=eigenvalues,
        simple=simple,
        diagnostics={
            "defective": defective,
            "collision": collision,
            "eig_residual": eig_residual,
        },
    )


def read_coordinates(
    roots: RootSet, B: MonomialBasis, family: MultiplicationFamily
) -> RootSet:
    """Fill coordinates from eigenvector entries (variables inside B) and
    eigenvalues (variables with a table); the rest stay NaN."""
    shape = roots.shape
    index = {m: i for i, m in enumerate(B)}
    pts = []
    for i, w in enumerate(roots.eigvecs):
        coords = []
        for g in range(shape.k):
            row = []
            for j in range(shape.dims[g]):
                v = shape.variable(g, j)
                if v in index:
                    row.append(complex(w[index[v]]))
                elif (g, j) in family.matrices:
                    row.append(complex(roots.eigenvalues[(g, j)][i]))
                else:
                    row.append(complex(np.nan))
            coords.append(tuple(row))
        pts.append(Point(tuple(coords)))
    return replace(roots, points=pts)


def missing_variables(roots: RootSet) -> list[tuple[int, int]]:
    out = []
    for g in range(roots.shape.k):
        for j in range(roots.shape.dims[g]):
            if any(np.isnan(p.coord(g, j)) for p in roots.points):
                out.append((g, j))
    return out


def recover_missing_coordinates(
    lam: MomentFunctional,
    roots: RootSet,
    weights,
    B: MonomialBasis,
    missing: list[tuple[int, int]],
) -> RootSet:
    """Express each missing variable over B and evaluate on the eigenvectors.

    The block lam(b_i b_j) is rebuilt from the recovered roots and weights
    (products of eigenvector entries), while the right-hand columns
    lam(b_i x_v) must be known data.
    """
    if not missing:
        return roots
    r = len(B)
    W = np.array([w for w in roots.eigvecs])  # W[t, i] = B_i at root t
    gam = np.asarray(weights)
    H_BB = (W * gam[:, None]).T @ W
    shape = roots.shape
    pts = [
        [list(c) for c in p.coords] for p in roots.points
    ]
    for (g, j) in missing:
        v = shape.variable(g, j)
        rows = [i for i, b in enumerate(B) if lam.known(b * v)]
        if len(rows) < r or numerical_rank(H_BB[rows]) < r:
            raise CoordinateRecoveryError(
                f"not enough known moments to recover {shape.var_name(g, j)}"
            )
        col = np.array([lam.known_value(B[i] * v) for i in rows])
        sol, *_ = np.linalg.lstsq(H_BB[rows], col, rcond=None)
        if np.linalg.norm(H_BB[rows] @ sol - col) > 1e-6 * max(
            1.0, np.linalg.norm(col)
        ):
            raise CoordinateRecoveryError(
                f"inconsistent data while recovering {shape.var_name(g, j)}"
            )
        values = W @ sol
        for t in range(len(pts)):
            pts[t][g][j] = complex(values[t])
    points = [Point(tuple(tuple(c) for c in p)) for p in pts]
    return replace(roots, points=points)


def solve_weights(T: Polynomial, points: list[Point]) -> tuple[np.ndarray, float]:
    """Fit T* = sum_i gamma_i 1_{zeta_i} by least squares on the moments.

    Only coefficients free of any still-missing coordinate are used; the
    residual of the fit is returned alongside the weights.
    """
    shape = T.shape
    known_var = np.ones((shape.k, max(shape.dims)), dtype=bool)
    for p in points:
        for g in range(shape.k):
            for j in range(shape.dims[g]):
                if np.isnan(p.coord(g, j)):
                    known_var[g, j] = False

    def usable(m: Monomial) -> bool:
        return all(known_var[g, j] for (g, j) in m.variable_factors())

    lam = build_moment_functional(T)
    monos = [
        m
        for m in enumerate_monomials(shape, list(shape.degrees))
        if usable(m)
    ]
    V = np.array([[p.eval_monomial(m) for p in points] for m in monos])
    rhs = np.array([lam.known_value(m) for m in monos])
    if numerical_rank(V) < len(points):
        raise WeightSolveError("evaluation system is rank deficient")
    gam, *_ = np.linalg.lstsq(V, rhs, rcond=None)
    residual = np.linalg.norm(V @ gam - rhs) / max(1.0, np.linalg.norm(rhs))
    return gam, residual
