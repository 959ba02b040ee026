import itertools
from fractions import Fraction

import pytest

from carnot_heat.catalog import builtin
from carnot_heat.fields import VectorField, bracket, hormander_rank, sublaplacian
from carnot_heat.poly import Polynomial

F = Fraction


def _heis_fields():
    g = builtin("heisenberg")
    X, Y, S = g.jacobian_basis
    return g, X, Y, S


def _expected_heis_fields(shape):
    x = Polynomial.variable(0)
    y = Polynomial.variable(1)
    X = VectorField(shape, {0: Polynomial.constant(1), 2: F(1, 2) * y})
    Y = VectorField(shape, {1: Polynomial.constant(1), 2: F(-1, 2) * x})
    S = VectorField(shape, {2: Polynomial.constant(1)})
    return X, Y, S


def test_derived_heisenberg_fields_match_printed_frame():
    g, X, Y, S = _heis_fields()
    eX, eY, eS = _expected_heis_fields(g.shape)
    assert X == eX
    assert Y == eY
    assert S == eS


def test_derived_euclidean_fields_are_coordinate_derivatives():
    g = builtin("euclidean(4)")
    for j, f in enumerate(g.jacobian_basis):
        assert f == VectorField(g.shape, {j: Polynomial.constant(1)})


def test_derived_step3_fields_match_printed_frame():
    g = builtin("step3I")
    x1, x2, x3 = (Polynomial.variable(i) for i in range(3))
    one = Polynomial.constant(1)
    eX1 = VectorField(
        g.shape,
        {0: one, 2: F(-1, 2) * x2, 3: F(-1, 2) * x3 - F(1, 12) * x1 * x2},
    )
    eX2 = VectorField(g.shape, {1: one, 2: F(1, 2) * x1, 3: F(1, 12) * x1**2})
    eX3 = VectorField(g.shape, {2: one, 3: F(1, 2) * x1})
    eX4 = VectorField(g.shape, {3: one})
    assert list(g.jacobian_basis) == [eX1, eX2, eX3, eX4]


def test_fields_at_zero_are_standard_basis():
    for name in ("heisenberg", "htype22", "step3I", "euclidean(3)"):
        g = builtin(name)
        for j, f in enumerate(g.jacobian_basis):
            v = f.value_at_zero()
            assert v == tuple(1 if m == j else 0 for m in range(g.dim))


# ---------------------------------------------------------------------------
# apply


def test_apply_examples():
    g, X, Y, S = _heis_fields()
    s = Polynomial.variable(2)
    x = Polynomial.variable(0)
    y = Polynomial.variable(1)
    assert X.apply(s) == F(1, 2) * y
    assert Y.apply(x * s) == F(-1, 2) * x**2
    for f in (X, Y, S):
        assert f.apply(Polynomial.constant(1)).is_zero


# ---------------------------------------------------------------------------
# brackets


def test_heisenberg_bracket_table():
    g, X, Y, S = _heis_fields()
    assert bracket(X, Y) == -S
    for f in (X, Y, S):
        assert bracket(f, f).is_zero
    assert bracket(X, S).is_zero
    assert bracket(Y, S).is_zero
    assert bracket(S, S).is_zero


def test_step3_bracket_table():
    g = builtin("step3I")
    X1, X2, X3, X4 = g.jacobian_basis
    assert bracket(X1, X2) == X3
    assert bracket(X1, bracket(X1, X2)) == X4
    assert bracket(X2, X3).is_zero
    assert bracket(X1, X4).is_zero
    assert bracket(X2, X4).is_zero
    assert bracket(X3, X4).is_zero


def test_htype22_bracket_table_induced_by_law():
    # the table the composition law actually induces on its Jacobian frame
    g = builtin("htype22")
    X1, X2, Y1, Y2, S1, S2 = g.jacobian_basis
    assert bracket(X1, X2) == -S1
    assert bracket(Y1, Y2) == -S1
    assert bracket(X1, Y1) == S2
    assert bracket(X2, Y2) == -S2
    assert bracket(X1, Y2).is_zero
    assert bracket(X2, Y1).is_zero
    for z in (S1, S2):
        for f in (X1, X2, Y1, Y2, S1, S2):
            assert bracket(f, z).is_zero


def test_jacobi_identity_exact():
    for name in ("heisenberg", "htype22", "step3I"):
        g = builtin(name)
        basis = g.jacobian_basis
        for f, h, k in itertools.combinations(basis, 3):
            total = (
                bracket(f, bracket(h, k))
                + bracket(h, bracket(k, f))
                + bracket(k, bracket(f, h))
            )
            assert total.is_zero


# ---------------------------------------------------------------------------
# rank and sublaplacian


def test_hormander_rank_examples():
    assert hormander_rank(list(builtin("heisenberg").generators)) == (3, 2)
    assert hormander_rank(list(builtin("euclidean(5)").generators)) == (5, 1)
    assert hormander_rank(list(builtin("step3I").generators)) == (4, 3)
    assert hormander_rank(list(builtin("htype22").generators)) == (6, 2)


def test_euclidean_sublaplacian_is_minus_laplacian():
    g = builtin("euclidean(2)")
    sym = g.sublaplacian()
    assert sym.second == {
        (0, 0): Polynomial.constant(-1),
        (1, 1): Polynomial.constant(-1),
    }
    assert sym.first == {}


def test_heisenberg_sublaplacian_expansion():
    g = builtin("heisenberg")
    sym = g.sublaplacian()
    x = Polynomial.variable(0)
    y = Polynomial.variable(1)
    minus_one = Polynomial.constant(-1)
    assert sym.second[(0, 0)] == minus_one
    assert sym.second[(1, 1)] == minus_one
    assert sym.second[(2, 2)] == F(-1, 4) * (x**2 + y**2)
    assert sym.second[(0, 2)] == -y
    assert sym.second[(1, 2)] == x
    assert sym.first == {}


def test_expanded_symbol_agrees_with_factored_application():
    x1 = Polynomial.variable(0)
    x2 = Polynomial.variable(1)
    for name in ("heisenberg", "htype22", "step3I"):
        g = builtin(name)
        sym = g.sublaplacian()
        probes = [
            x1**3 * x2,
            Polynomial.variable(g.dim - 1) ** 2,
            (x1 + x2) ** 2 * Polynomial.variable(g.dim - 1),
        ]
        for u in probes:
            assert sym.apply(u) == sym.apply_factored(u)


def test_sublaplacian_is_homogeneous_of_degree_two():
    # L(u o dil_lam) = lam^2 (L u) o dil_lam  on monomial probes, with a
    # symbolic scale variable
    for name in ("heisenberg", "step3I"):
        g = builtin(name)
        d = g.dim
        lam = Polynomial.variable(d)
        sym = g.sublaplacian()
        weights = g.shape.weights
        dil = {i: lam ** weights[i] * Polynomial.variable(i) for i in range(d)}
        probes = [
            Polynomial.variable(0) ** 2,
            Polynomial.variable(d - 1),
            Polynomial.variable(0) * Polynomial.variable(1),
            Polynomial.variable(d - 1) * Polynomial.variable(0) ** 2,
        ]
        for u in probes:
            lhs = sym.apply(u.subs(dil))
            # undo the dilation on the symbol's own variables
            rhs = lam**2 * sym.apply(u).subs(dil)
            assert lhs == rhs


def test_bracket_shape_mismatch():
    a = builtin("heisenberg").generators[0]
    b = builtin("euclidean(3)").generators[0]
    with pytest.raises(ValueError):
        bracket(a, b)
