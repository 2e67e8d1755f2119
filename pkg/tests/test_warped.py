import math

import numpy as np
import pytest

from warpgeom.calculus import Frame, covariant_derivative, lie_metric
from warpgeom.manifold import CoordVectorField, SamplePlan, euclidean, hyperbolic_chart, interval, sphere_chart
from warpgeom.warped import (
    LiftedField, NonPositiveWarpingError, build_warped, connection_blocks, connection_blocks_at, f_star_at,
    lie_blocks, lie_blocks_at, ricci_blocks, ricci_blocks_at,
)

from oracles import f_star_cosh

CONE = build_warped(interval(1, (0.2, 5)), sphere_chart(1.0), "t")


def test_product_metric_blocks():
    W = build_warped(interval(1, (0, 10)), sphere_chart(1.0), "t")
    th = 0.8
    assert np.allclose(W.product.metric_at([3.0, th, 0.1]), np.diag([1, 9, 9 * math.sin(th) ** 2]))
    L = build_warped(interval(-1, (0, 3)), euclidean(2, ("x", "y")), "exp(t)")
    assert np.allclose(L.product.metric_at([1.0, 0.2, 0.3]), np.diag([-1, math.e**2, math.e**2]))
    P = build_warped(euclidean(2), euclidean(2, ("z", "w")), "1")
    assert np.array_equal(P.product.metric_at([0.1, 0.2, 0.3, 0.4]), np.eye(4))


def test_build_errors():
    with pytest.raises(ValueError):
        build_warped(euclidean(2), euclidean(2), "1")  # shared coordinate names
    with pytest.raises(ValueError):
        build_warped(interval(1, (0, 1)), sphere_chart(), "theta")  # f must live on the base
    W = build_warped(interval(1, (-1, 1)), sphere_chart(), "t")
    with pytest.raises(NonPositiveWarpingError):
        W.sample_points(SamplePlan(20))


def test_f_star_examples():
    W = build_warped(interval(1, (0.2, 3)), sphere_chart(), "1.5*(t+0.5)")
    assert abs(f_star_at(W, [1.3]) - 2.25) < 1e-14
    C = build_warped(interval(1, (0.2, 3)), sphere_chart(), "cosh(t)")
    for t in (0.3, 1.0, 2.2):
        assert abs(f_star_at(C, [t]) - f_star_cosh(t)) < 1e-12
    K = build_warped(euclidean(2), sphere_chart(), "2")
    assert f_star_at(K, [0.1, 0.2]) == 0.0


def test_connection_examples():
    p = [2.0, math.pi / 2, 0.7]
    dphi, dth, dt = CONE.basis(2), CONE.basis(1), CONE.basis(0)
    assert np.allclose(connection_blocks_at(CONE, dphi, dphi, p), [-2, 0, 0], atol=1e-14)
    assert np.allclose(connection_blocks_at(CONE, dt, dth, p), [0, 0.5, 0])
    z = CONE.lift(["t^2"], ["0", "0"])
    v = connection_blocks_at(CONE, dt, z, p)
    assert np.allclose(v[1:], 0) and abs(v[0] - 4.0) < 1e-14


def test_ricci_block_examples():
    b = ricci_blocks_at(CONE, [1.3, 1.0, 0.2])
    assert np.abs(b.assemble()).max() < 1e-13
    C = build_warped(interval(1, (0.2, 3)), sphere_chart(), "cosh(t)")
    t, th = 0.9, 1.2
    b = ricci_blocks_at(C, [t, th, 0.4])
    g2 = np.diag([1, math.sin(th) ** 2])
    assert np.allclose(b.fiber, (1 - f_star_cosh(t)) * g2, atol=1e-12)
    P = build_warped(sphere_chart(), sphere_chart(1.0, ("a", "b")), "1")
    b = ricci_blocks_at(P, [1.0, 0.2, 0.7, 0.3])
    assert np.allclose(b.base, np.diag([1, math.sin(1.0) ** 2]))
    assert np.allclose(b.fiber, np.diag([1, math.sin(0.7) ** 2]))
    assert np.array_equal(b.mixed, np.zeros((2, 2)))


def test_lie_block_examples():
    p = [1.7, 0.9, 0.3]
    b = lie_blocks_at(CONE, CONE.lift(["t"], ["0", "0"]), p)
    assert np.allclose(b.assemble(), 2 * CONE.product.metric_at(p))
    R = build_warped(euclidean(2), sphere_chart(), "1+x^2+y^2")
    b = lie_blocks_at(R, R.lift(["-y", "x"], ["0", "0"]), [0.3, 0.2, 1.0, 2.0])
    assert np.abs(b.assemble()).max() < 1e-14
    b = lie_blocks_at(CONE, CONE.lift(["0"], ["0", "1"]), p)
    assert np.abs(b.assemble()).max() < 1e-14


FAMILY = [
    (interval(1, (0.2, 2)), sphere_chart(), "1.5*(t+0.5)"),
    (interval(-1, (0.2, 2)), sphere_chart(), "cosh(t)"),
    (interval(1, (0.2, 2)), hyperbolic_chart(coords=("p", "q")), "exp(t)"),
    (interval(-1, (0.2, 2)), euclidean(2, ("z", "w")), "exp(t)"),
    (euclidean(2), sphere_chart(), "1"),
    (euclidean(2), hyperbolic_chart(coords=("p", "q")), "cosh(x)"),
]


@pytest.mark.parametrize("base,fiber,f", FAMILY, ids=[f"{b.name}-{fi.name}-{f}" for b, fi, f in FAMILY])
def test_blocks_match_direct(base, fiber, f):
    W = build_warped(base, fiber, f)
    X = W.sample_points(SamplePlan(50, seed=7))
    F = Frame(W.product, X)
    z1 = [f"cos({c})" for c in base.coords]
    z2 = [f"{fiber.coords[1]}", f"sin({fiber.coords[0]})"]
    zeta = W.lift(z1, z2)
    fields = [W.basis(i) for i in range(W.product.dim)] + [zeta]
    for A in fields:
        for B in fields:
            a = connection_blocks(W, A, B, X)
            d = covariant_derivative(F, A.on_product, B.on_product)
            assert np.abs(a - d).max() <= 1e-6 * max(1, np.abs(d).max())
    rb = ricci_blocks(W, X)
    R = F.ricci
    n1 = W.n1
    assert np.abs(rb.base - R[:, :n1, :n1]).max() <= 1e-5 * max(1, np.abs(R).max())
    assert np.abs(rb.fiber - R[:, n1:, n1:]).max() <= 1e-5 * max(1, np.abs(R).max())
    assert np.abs(R[:, :n1, n1:]).max() <= 1e-7
    L = lie_metric(F, zeta.on_product)
    assert np.abs(lie_blocks(W, zeta, X).assemble() - L).max() <= 1e-8 * max(1, np.abs(L).max())


def test_lifted_field_on_product():
    z = CONE.lift(["t"], ["0", "cos(theta)"])
    P = z.on_product
    assert isinstance(z, LiftedField) and isinstance(P, CoordVectorField)
    assert P.chart is CONE.product
    assert np.allclose(P.values([[2.0, 0.0, 1.0]]), [[2.0, 0.0, 1.0]])
