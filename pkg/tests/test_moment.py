import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden_data as gd
from conftest import poly, rank_one_expand
from tdec.algebra import (
    Monomial,
    MomentFunctional,
    ParamExpr,
    Point,
    Polynomial,
    Shape,
)
from tdec.moment import (
    MonomialBasis,
    NoInvertibleBlockError,
    UnresolvedParameterError,
    basis_plus,
    border,
    build_moment_functional,
    catalecticant,
    enumerate_monomials,
    flattening_ranks,
    functional_to_tensor,
    hankel,
    numerical_rank,
    select_bases,
    shifted_hankel,
)
from tdec.algebra import weighted_evaluation


def basis_of(shape, names):
    return MonomialBasis(shape, tuple(Monomial.parse(s, shape) for s in names))


class TestBuildMomentFunctional:
    def test_demo_moments(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        get = lambda s: lam.known_value(Monomial.parse(s, shape1))
        assert get("1") == 4
        assert get("a1") == 7
        assert get("a1*b1") == 21
        assert get("a1*b1*c1") == 68

    def test_zero_tensor(self):
        shape = Shape(dims=(2, 2), degrees=(1, 1))
        lam = build_moment_functional(Polynomial(shape, {}))
        assert all(v == 0 for v in lam.entries.values())
        assert len(lam.entries) == shape.ambient_dim

    def test_binary_cubic_divides_binomials(self):
        # (1 + 2x)^3 has moments equal to powers of 2
        shape = Shape(dims=(1,), degrees=(3,))
        x = Monomial.parse("a1", shape)
        T = Polynomial(shape, {shape.one(): 1, x: 6, x * x: 12, x * x * x: 8})
        lam = build_moment_functional(T)
        assert lam.known_value(shape.one()) == 1
        assert lam.known_value(x) == 2
        assert lam.known_value(x * x) == 4
        assert lam.known_value(x * x * x) == 8


class TestFunctionalToTensor:
    def test_round_trip(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        back = functional_to_tensor(lam, shape1)
        assert back.terms == tensor1.terms

    def test_zero(self):
        shape = Shape(dims=(1, 1), degrees=(1, 1))
        lam = build_moment_functional(Polynomial(shape, {}))
        assert functional_to_tensor(lam, shape).is_zero()

    def test_weighted_evaluations_match_expansion(self):
        # brute-force expansion of rank-one terms is the oracle
        rng = np.random.default_rng(5)
        shape = Shape(dims=(2, 2), degrees=(2, 1))
        pts = [
            Point(tuple(tuple(rng.uniform(-1, 1, n)) for n in shape.dims))
            for _ in range(3)
        ]
        ws = rng.uniform(0.5, 2.0, 3)
        dom = enumerate_monomials(shape, list(shape.degrees))
        lam = weighted_evaluation(ws, pts, shape, dom)
        tensor = functional_to_tensor(lam, shape)
        expected = rank_one_expand(shape, ws, pts)
        for m in set(tensor.terms) | set(expected.terms):
            assert tensor.coeff(m) == pytest.approx(expected.coeff(m), rel=1e-10)

    def test_unresolved_raises(self):
        shape = Shape(dims=(1,), degrees=(1,))
        lam = MomentFunctional(shape, {shape.one(): 1.0})
        with pytest.raises(UnresolvedParameterError):
            functional_to_tensor(lam, shape)


class TestEnumerate:
    def test_univariate(self):
        shape = Shape(dims=(1,), degrees=(2,))
        assert [str(m) for m in enumerate_monomials(shape, [2])] == ["1", "a1", "a1^2"]

    def test_one_group_active(self):
        shape = Shape(dims=(3, 3, 3), degrees=(1, 1, 1))
        out = enumerate_monomials(shape, [1, 0, 0])
        assert [str(m) for m in out] == ["1", "a1", "a2", "a3"]

    def test_count(self):
        shape = Shape(dims=(2, 2), degrees=(1, 1))
        assert len(enumerate_monomials(shape, [1, 1])) == 9

    @given(st.integers(1, 3), st.integers(1, 3))
    def test_size_formula(self, n, b):
        import math

        shape = Shape(dims=(n,), degrees=(b,))
        assert len(enumerate_monomials(shape, [b])) == math.comb(n + b, b)


class TestBasisPlus:
    def test_univariate(self):
        shape = Shape(dims=(1,), degrees=(2,))
        B = basis_of(shape, ["1"])
        assert [str(m) for m in basis_plus(B)] == ["1", "a1"]

    def test_three_variables(self):
        shape = Shape(dims=(3,), degrees=(2,))
        B = basis_of(shape, ["1", "a1"])
        out = basis_plus(B)
        assert [str(m) for m in out] == [
            "1", "a1", "a2", "a3", "a1^2", "a1*a2", "a1*a3",
        ]

    def test_demo_border_contains_reduction_targets(self, shape2):
        B = basis_of(shape2, gd.H2_B_COLS)
        plus = set(str(m) for m in basis_plus(B))
        for s in ["a1*b3", "a2*b3", "a3*b3", "a1^2", "a1*a2", "a2*a3", "b3"]:
            assert s in plus
        assert set(str(m) for m in border(B)).isdisjoint(set(gd.H2_B_COLS))


class TestHankel:
    def test_demo_4x4(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        H = hankel(lam, basis_of(shape1, gd.H1_B_ROWS), basis_of(shape1, gd.H1_B_COLS))
        assert H.fully_known
        np.testing.assert_array_equal(H.numeric(), np.array(gd.H1, dtype=float))

    def test_demo_6x6(self, tensor2, shape2):
        lam = build_moment_functional(tensor2)
        H = hankel(lam, basis_of(shape2, gd.H2_B_ROWS), basis_of(shape2, gd.H2_B_COLS))
        assert H.fully_known
        np.testing.assert_array_equal(H.numeric(), np.array(gd.H2, dtype=float))

    def test_single_entry(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        B = basis_of(shape1, ["1"])
        H = hankel(lam, B, B)
        assert H.numeric() == np.array([[4.0]])

    def test_transpose_swaps_bases(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        B = basis_of(shape1, ["1", "a1", "a2"])
        Bp = basis_of(shape1, ["1", "b1", "c2"])
        H1 = hankel(lam, Bp, B)
        H2 = hankel(lam, B, Bp)
        np.testing.assert_allclose(H1.numeric(), H2.numeric().T)

    def test_quasi_hankel_parameter_sharing(self):
        shape = Shape(dims=(2,), degrees=(1,))
        x, y = shape.variable(0, 0), shape.variable(0, 1)
        lam = MomentFunctional(
            shape, {shape.one(): 1.0, x: 2.0, y: 3.0}
        )
        B = MonomialBasis(shape, (shape.one(), x, y))
        H = hankel(lam, B, B)
        # the monomial x*y shows up at (1,2) and (2,1) with one shared id
        e12 = H.entry(1, 2)
        e21 = H.entry(2, 1)
        assert isinstance(e12, ParamExpr) and isinstance(e21, ParamExpr)
        assert list(e12.coeffs) == list(e21.coeffs) == [x * y]

    def test_shifted_matches_definition(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        B = basis_of(shape1, gd.H1_B_COLS)
        Bp = basis_of(shape1, gd.H1_B_ROWS)
        Hs = shifted_hankel(lam, (2, 0), Bp, B)  # shift by c1
        c1 = Monomial.parse("c1", shape1)
        for i, mr in enumerate(Bp):
            for j, mc in enumerate(B):
                assert Hs.values[i, j] == lam.known_value(c1 * mr * mc)

    def test_shifted_of_evaluation(self):
        shape = Shape(dims=(2,), degrees=(1,))
        zeta = Point(((5.0, -3.0),))
        dom = enumerate_monomials(shape, [2])
        from tdec.algebra import evaluation_functional

        lam = evaluation_functional(zeta, shape, dom)
        B = MonomialBasis(shape, (shape.one(),))
        Hs = shifted_hankel(lam, (0, 1), B, B)
        assert Hs.numeric() == np.array([[-3.0]])


class TestNumericalRank:
    def test_exact_rank(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(6, 3)) @ rng.normal(size=(3, 7))
        assert numerical_rank(A) == 3

    def test_zero(self):
        assert numerical_rank(np.zeros((3, 3))) == 0


class TestSelectBases:
    def test_demo_rank4(self, tensor1, shape1):
        lam = build_moment_functional(tensor1)
        B, Bp = select_bases(lam, 4)
        H = hankel(lam, Bp, B).numeric()
        assert H.shape == (4, 4)
        assert numerical_rank(H) == 4
        assert [str(m) for m in B] == ["1", "a1", "a2", "a3"]

    def test_demo_rank6_matches_reference_block(self, tensor2, shape2):
        lam = build_moment_functional(tensor2)
        B, Bp = select_bases(lam, 6)
        assert [str(m) for m in B] == gd.H2_B_COLS
        assert [str(m) for m in Bp] == gd.H2_B_ROWS
        np.testing.assert_array_equal(
            hankel(lam, Bp, B).numeric(), np.array(gd.H2, dtype=float)
        )

    def test_rank_one_evaluation(self):
        shape = Shape(dims=(2, 2), degrees=(1, 1))
        zeta = Point(((1.5, -2.0), (0.5, 3.0)))
        dom = enumerate_monomials(shape, list(shape.degrees))
        lam = weighted_evaluation([2.0], [zeta], shape, dom)
        B, Bp = select_bases(lam, 1)
        assert len(B) == 1 and B[0].is_one()
        assert len(Bp) == 1 and Bp[0].is_one()

    def test_impossible_rank_raises(self, tensor1):
        lam = build_moment_functional(tensor1)
        with pytest.raises(NoInvertibleBlockError):
            select_bases(lam, 7)


class TestFlatteningRanks:
    def test_rank_lower_bound_matches_flattening(self, tensor2):
        lam = build_moment_functional(tensor2)
        ranks = flattening_ranks(lam)
        assert max(ranks.values()) == 6

    def test_single_group_split_equals_unfolding_rank(self, tensor1, shape1):
        # moment matrix of a one-group-vs-rest split is the mode unfolding
        from tdec.decompose import _unfold, poly_to_array

        lam = build_moment_functional(tensor1)
        A = poly_to_array(tensor1)
        for g in range(3):
            col_bounds = tuple(1 if h == g else 0 for h in range(3))
            row_bounds = tuple(0 if h == g else 1 for h in range(3))
            C, _, _ = catalecticant(lam, row_bounds, col_bounds)
            assert numerical_rank(C) == numerical_rank(_unfold(A, g))

    def test_generic_rank_r_reaches_r(self):
        # sum of r generic evaluations has moment-matrix rank exactly r
        rng = np.random.default_rng(11)
        shape = Shape(dims=(3, 3, 3), degrees=(1, 1, 1))
        dom = enumerate_monomials(shape, list(shape.degrees))
        pts = [
            Point(tuple(tuple(rng.uniform(-1, 1, n)) for n in shape.dims))
            for _ in range(3)
        ]
        lam = weighted_evaluation([1.0, -2.0, 0.5], pts, shape, dom)
        tensor = functional_to_tensor(lam, shape)
        ranks = flattening_ranks(build_moment_functional(tensor))
        assert max(ranks.values()) == 3
