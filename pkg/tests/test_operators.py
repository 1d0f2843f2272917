import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubetau import BoundaryOperator, Side, dirichlet, neumann, robin
from cubetau.basis import vandermonde
from cubetau.operators import commutes, cross_apply, functional_row


def test_dirichlet_high_row_is_ones():
    assert np.array_equal(functional_row(dirichlet(0, Side.HIGH), 6), np.ones(6))


def test_neumann_low_is_outward():
    # outward normal at x = -1 is -d/dx, so u = x has d_n u = -1
    row = functional_row(neumann(0, Side.LOW), 4)
    assert np.allclose(row, [0, -1, 4, -9])
    n = np.arange(4)
    assert np.allclose(row, -((-1.0) ** (n + 1)) * n ** 2)


def test_robin_high_on_unit_interval():
    row = functional_row(robin(0, Side.HIGH, 1.0, 1.0), 3, (0.0, 1.0))
    assert np.allclose(row, np.array([1, 1, 1]) + 2 * np.array([0, 1, 4]))


@pytest.mark.parametrize("side,x", [(Side.LOW, -1.0), (Side.HIGH, 1.0)])
def test_functional_row_matches_pointwise(side, x):
    op = BoundaryOperator(0, side, (0.5, -2.0, 3.0))
    N = 9
    s = side.sign
    want = 0.5 * vandermonde(0, N, x) - 2.0 * s * vandermonde(0, N, x, 1) + 3.0 * vandermonde(0, N, x, 2)
    assert np.allclose(functional_row(op, N), want)


def test_axis_frame_round_trip():
    op = BoundaryOperator.from_axis_derivative(1, Side.LOW, (0.0, 1.0))
    assert op.normal_poly == (0.0, -1.0)
    assert op.axis_poly() == (0.0, 1.0)
    assert op.is_neumann()
    assert BoundaryOperator(0, Side.HIGH, (0.0, 1.0, 0.0)).order == 1


def test_operator_validation():
    with pytest.raises(ValueError):
        BoundaryOperator(0, Side.LOW, (0.0,))
    with pytest.raises(ValueError):
        BoundaryOperator(-1, Side.LOW)


def test_commutes_examples():
    assert commutes(dirichlet(0, Side.LOW), neumann(1, Side.HIGH))
    assert commutes(robin(0, Side.LOW), robin(0, Side.LOW))
    assert not commutes(dirichlet(0, Side.LOW), dirichlet(0, Side.HIGH))


def test_cross_apply_examples():
    data = np.random.default_rng(0).standard_normal((4, 5))
    assert np.array_equal(cross_apply([], data), data)
    u = np.zeros((4, 4))
    u[1, 2] = 1.0
    assert np.allclose(cross_apply([dirichlet(0, Side.HIGH)], u), np.eye(4)[2])


def test_cross_apply_duplicate_axes():
    with pytest.raises(ValueError):
        cross_apply([dirichlet(0, Side.LOW), neumann(0, Side.HIGH)], np.zeros((4, 4)))


def test_cross_apply_face_axes():
    # data living on a z face of a cube: axes (0, 1)
    data = np.random.default_rng(1).standard_normal((5, 6))
    out = cross_apply([dirichlet(1, Side.LOW)], data, axes=(0, 1))
    assert np.allclose(out, data @ ((-1.0) ** np.arange(6)))


ops_strategy = st.tuples(
    st.sampled_from([Side.LOW, Side.HIGH]),
    st.lists(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=3),
)


@settings(max_examples=40, deadline=None)
@given(st.lists(ops_strategy, min_size=3, max_size=3), st.integers(0, 2 ** 31))
def test_cross_apply_order_independent(specs, seed):
    ops = [BoundaryOperator(j, side, tuple(poly)) for j, (side, poly) in enumerate(specs)]
    data = np.random.default_rng(seed).standard_normal((5, 6, 7))
    dom = [(0.0, 1.0), (-1.0, 1.0), (-2.0, 3.0)]
    ref = cross_apply(ops, data, dom)
    for perm in itertools.permutations(ops):
        assert np.allclose(cross_apply(perm, data, dom), ref)
