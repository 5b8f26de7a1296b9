import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tlfpm.approx import (
    GfdmStencil, ShapeFunctionSet, build_stencil, displacement_gradient, evaluate_shape,
    expand_to_vector, scalar_gradient_stencil, stencil_weights,
)
from tlfpm.mesh import RankDeficientSupport, build_dual_complex, generate


def _stencil(origin, nbrs, w=None):
    nbrs = np.asarray(nbrs, float)
    w = np.ones(len(nbrs)) if w is None else w
    gamma = scalar_gradient_stencil(origin, nbrs, w)
    return GfdmStencil(0, np.arange(1, len(nbrs) + 1), np.asarray(origin, float), gamma)


def test_two_neighbours_linear():
    s = _stencil([0, 0], [[1, 0], [0, 1]])
    u = np.array([[0, 0], [1, 0], [0, 0]], float)   # u_x = x
    g = displacement_gradient(s, u.ravel())
    assert np.allclose(g, [[1, 0], [0, 0]])


def test_collinear_neighbours_rejected():
    with pytest.raises(RankDeficientSupport):
        _stencil([0, 0], [[1, 0], [2, 0]])


def test_matches_extended_precision_normal_equations():
    x0 = np.zeros(2)
    nb = np.array([[1.0, 0], [0, 1], [1, 1]])
    w = np.array([1.0, 1.0, 1.0])
    C = expand_to_vector(scalar_gradient_stencil(x0, nb, w))
    mpmath.mp.dps = 40
    # block A of the least-squares problem in the interleaved unknowns a
    rows = []
    for d in nb:
        rows.append([d[0], d[1], 0, 0])
        rows.append([0, 0, d[0], d[1]])
    A = mpmath.matrix(rows)
    W = mpmath.diag([w[i // 2] for i in range(2 * len(nb))])
    # [I1 I2] maps u_E to the differences u_i - u_0, component-interleaved
    sel = mpmath.zeros(2 * len(nb), 2 + 2 * len(nb))
    for i in range(2 * len(nb)):
        sel[i, i % 2] = -1
        sel[i, 2 + i] = 1
    ref = mpmath.inverse(A.T * W * A) * (A.T * W * sel)
    ref = np.array(ref.tolist(), dtype=float)
    assert np.allclose(C, ref, atol=1e-14)


def test_constant_annihilation_and_weight_scaling(rng):
    nb = rng.normal(size=(6, 3))
    w = rng.uniform(0.5, 2.0, size=6)
    g1 = scalar_gradient_stencil(np.zeros(3), nb, w)
    g2 = scalar_gradient_stencil(np.zeros(3), nb, 7.3 * w)
    assert np.abs(g1.sum(axis=1)).max() < 1e-13
    assert np.allclose(g1, g2, atol=1e-12, rtol=0)


@pytest.mark.parametrize("three", [False, True])
@pytest.mark.parametrize("scheme", ["uniform", "inverse_distance"])
def test_affine_reproduction_every_point(rng, three, scheme):
    m = generate.box(1, 1, 1, 4, 4, 4, jitter=0.2, seed=5) if three else generate.rectangle(2, 1, 7, 5, jitter=0.25)
    shapes = ShapeFunctionSet(build_dual_complex(m), scheme)
    d = m.dim
    for _ in range(100):
        B = rng.normal(size=(d, d))
        c = rng.normal(size=d)
        U = m.nodes @ B.T + c
        assert np.abs(shapes.gradients(U) - B).max() < 1e-10


def test_gradient_examples():
    m = generate.rectangle(1, 1, 4, 4, jitter=0.2)
    shapes = ShapeFunctionSet(build_dual_complex(m))
    s = shapes[5]
    B = np.array([[0.1, 0.2], [0.3, 0.4]])
    assert np.allclose(displacement_gradient(s, s.gather(np.zeros((16, 2)))), 0)
    assert np.allclose(displacement_gradient(s, s.gather(np.ones((16, 2)) * 3.0)), 0, atol=1e-13)
    assert np.allclose(displacement_gradient(s, s.gather(m.nodes @ B.T)), B)


def test_evaluate_shape(rng):
    m = generate.box(1, 1, 1, 3, 3, 3, jitter=0.1)
    shapes = ShapeFunctionSet(build_dual_complex(m))
    s = shapes[13]
    N0 = evaluate_shape(s, s.origin)
    assert np.array_equal(N0[:, :3], np.eye(3)) and not N0[:, 3:].any()
    uE = rng.normal(size=3 * len(s.indices))
    x = s.origin + rng.normal(scale=0.1, size=3)
    direct = uE[:3] + displacement_gradient(s, uE) @ (x - s.origin)
    assert np.allclose(evaluate_shape(s, x) @ uE, direct)
    B = rng.normal(size=(3, 3))
    assert np.allclose(evaluate_shape(s, x) @ s.gather(m.nodes @ B.T), B @ x)


def test_evaluation_operator_matches_values(rng):
    m = generate.rectangle(2, 1, 5, 4, jitter=0.2)
    shapes = ShapeFunctionSet(build_dual_complex(m))
    U = rng.normal(size=(m.n_nodes, 2))
    cells = rng.integers(0, m.n_nodes, size=30)
    x = m.nodes[cells] + rng.normal(scale=0.05, size=(30, 2))
    assert np.allclose(shapes.evaluation_operator(cells, x) @ U, shapes.values_at(cells, x, U))


def test_stencil_weights():
    off = np.array([[2.0, 0], [0, 1]])
    assert np.allclose(stencil_weights(off), 1.0)
    assert np.allclose(stencil_weights(off, "inverse_distance"), [0.25, 1.0])
    with pytest.raises(ValueError, match="unknown weight"):
        stencil_weights(off, "gauss")


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_linear_reproduction_property(b, c):
    B = np.array(b).reshape(2, 2)
    nb = np.array([[0.3, 0.1], [-0.2, 0.4], [0.1, -0.5], [-0.3, -0.2]])
    s = _stencil([0.0, 0.0], nb)
    pts = np.vstack([[0, 0], nb])
    assert np.allclose(displacement_gradient(s, (pts @ B.T + c).ravel()), B,
                       atol=1e-10)
