import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import golden_data as gd
from tdec.algebra import Monomial, Point, Polynomial, Shape


def poly(shape: Shape, coeffs: dict[str, complex]) -> Polynomial:
    return Polynomial(
        shape, {Monomial.parse(s, shape): c for s, c in coeffs.items()}
    )


def rank_one_expand(shape: Shape, weights, points) -> Polynomial:
    """Expand sum_i gamma_i prod_g (1 + <zeta_g, x_g>)^(d_g) term by term."""
    total = Polynomial(shape, {})
    for w, pt in zip(weights, points):
        term = Polynomial(shape, {shape.one(): w})
        for g, coords in enumerate(pt.coords):
            linear = Polynomial(shape, {shape.one(): 1})
            for j, z in enumerate(coords):
                linear = linear + Polynomial(shape, {shape.variable(g, j): z})
            term = term * linear ** shape.degrees[g]
        total = total + term
    return total


@pytest.fixture(scope="session")
def shape1():
    return Shape(**gd.SHAPE1)


@pytest.fixture(scope="session")
def shape2():
    return Shape(**gd.SHAPE2)


@pytest.fixture(scope="session")
def tensor1(shape1):
    return poly(shape1, gd.COEFFS1)


@pytest.fixture(scope="session")
def tensor2(shape2):
    return poly(shape2, gd.COEFFS2)


@pytest.fixture(scope="session")
def points1():
    return [Point(tuple(tuple(c) for c in p)) for p in gd.POINTS1]


@pytest.fixture(scope="session")
def points2():
    return [Point(tuple(tuple(c) for c in p)) for p in gd.POINTS2]
