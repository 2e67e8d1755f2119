import numpy as np
import pytest

from warpgeom.manifold import CoordVectorField, SamplePlan, ScalarField, euclidean, interval, sphere_chart
from warpgeom.soliton import (
    abs_metric, classify_field, concurrent_residual, conformal_fit, einstein_fit, gradient_potential_check,
    gradient_soliton_residual, killing_residual, potential_of, soliton_fit, soliton_verdict, vector_norm,
)
from warpgeom.tolerances import DEFAULT
from warpgeom.warped import build_warped

E2 = euclidean(2)
XE = E2.sample_points(SamplePlan(40))
CONE = build_warped(interval(1, (0.2, 5)), sphere_chart(1.0), "t")
XC = CONE.sample_points(SamplePlan(64))


def vf(M, comps):
    return CoordVectorField.from_strings(M, comps)


def test_killing_residual_examples():
    assert killing_residual(E2, vf(E2, ["-y", "x"]), XE) <= 1e-10
    assert abs(killing_residual(E2, vf(E2, ["x", "y"]), XE) - 1.0) < 1e-14
    W = build_warped(euclidean(2), sphere_chart(), "2")
    Z = W.lift(["-y", "x"], ["0", "0"]).on_product
    assert killing_residual(W.product, Z, W.sample_points(SamplePlan(30))) <= 1e-8


def test_conformal_examples():
    c = conformal_fit(CONE.product, vf(CONE.product, ["t", "0", "0"]), XC)
    assert np.allclose(c.rho, 2.0) and c.residual < 1e-12 and c.is_homothetic(1e-8)
    k = conformal_fit(E2, vf(E2, ["-y", "x"]), XE)
    assert np.abs(k.rho).max() < 1e-12 and k.is_killing(1e-8)
    s = conformal_fit(E2, vf(E2, ["x", "-y"]), XE)
    assert np.abs(s.rho).max() < 1e-12 and s.residual > 0.5 and not s.is_conformal(1e-6)


def test_concurrent_examples():
    assert concurrent_residual(CONE.product, vf(CONE.product, ["t", "0", "0"]), XC) <= 1e-8
    C = build_warped(interval(1, (0.5, 4)), sphere_chart(), "cosh(t)")
    assert concurrent_residual(C.product, vf(C.product, ["coth(t)", "0", "0"]), C.sample_points(SamplePlan(64))) > 0.1
    assert abs(concurrent_residual(E2, vf(E2, ["1", "0"]), XE) - 1.0) < 1e-14


def test_gradient_potential_examples():
    assert gradient_potential_check(E2, vf(E2, ["x", "y"]), XE) == 0.0
    assert gradient_potential_check(CONE.product, vf(CONE.product, ["t", "0", "0"]), XC) <= 1e-8
    rot = vf(E2, ["-y", "x"])
    r = gradient_potential_check(E2, rot, XE)
    # grad(1/2 |zeta|^2) = (x, y), so the residual is |(-y - x, x - y)| = sqrt(2) |p|
    assert abs(r - np.sqrt(2) * np.linalg.norm(XE, axis=1).max()) < 1e-12


def test_potential_expression():
    u = potential_of(vf(CONE.product, ["t", "0", "0"]))
    assert u.expr.eval([3.0, 1.0, 1.0]) == 4.5


def test_soliton_fit_examples():
    fit = soliton_fit(CONE.product, vf(CONE.product, ["t", "0", "0"]), XC)
    assert abs(fit.lam - 1) <= 1e-4 and fit.residual_max <= 1e-4 and fit.verdict == "shrinking"
    S = sphere_chart()
    fit = soliton_fit(S, CoordVectorField.zero(S), S.sample_points(SamplePlan(30)))
    assert abs(fit.lam - 1) < 1e-12 and fit.residual_max < 1e-12
    fit = soliton_fit(E2, vf(E2, ["x", "y"]), XE)
    assert fit.lam == 1.0 and fit.residual_max == 0.0


def test_verdicts():
    assert soliton_verdict(0.5, 0.0) == "shrinking"
    assert soliton_verdict(-0.5, 0.0) == "expanding"
    assert soliton_verdict(1e-9, 0.0) == "steady"
    assert soliton_verdict(1.0, 1.0) == "not-a-soliton"
    assert soliton_fit(E2, vf(E2, ["-y", "x"]), XE).verdict == "steady"
    assert soliton_fit(E2, vf(E2, ["x", "-y"]), XE, tol=DEFAULT).verdict == "not-a-soliton"


def test_einstein_fit_examples():
    assert einstein_fit(euclidean(3), euclidean(3).sample_points(SamplePlan(5))).mu == 0.0
    S = sphere_chart()
    assert abs(einstein_fit(S, S.sample_points(SamplePlan(30))).mu - 1) < 1e-12
    e = einstein_fit(CONE.product, XC)
    assert abs(e.mu) < 1e-12 and e.residual_max < 1e-12


def test_gradient_soliton_examples():
    assert gradient_soliton_residual(CONE.product, ScalarField.from_string(CONE.product, "t^2/2"), 1.0, XC) <= 1e-4
    assert gradient_soliton_residual(E2, ScalarField.from_string(E2, "(x^2+y^2)/2"), 1.0, XE) == 0.0
    S = sphere_chart()
    assert gradient_soliton_residual(S, ScalarField.from_string(S, "0"), 1.0, S.sample_points(SamplePlan(20))) < 1e-12


def test_abs_metric_norm_lorentzian():
    g = np.array([[[-1.0, 0.0], [0.0, 4.0]]])
    assert np.allclose(abs_metric(g), np.diag([1.0, 4.0]))
    assert np.allclose(vector_norm(g, np.array([[1.0, 1.0]])), [np.sqrt(5.0)])


def test_classification_labels():
    c = classify_field(E2, vf(E2, ["x", "y"]), XE)
    assert c.labels(1e-8) == ["conformal", "homothetic", "concurrent", "gradient-of-half-norm"]
    assert classify_field(E2, vf(E2, ["-y", "x"]), XE).labels(1e-8) == ["killing", "conformal"]
