"""One test per acceptance criterion; the conftest prints a PASS/FAIL line for each.

Run alone with ``python tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py``.
"""

import json

import numpy as np
import pytest

from warpgeom.calculus import Frame, expr_jets, lie_metric, nabla
from warpgeom.cli import bundled_manifests, main
from warpgeom.expr import fd_jet2_batch, parse, to_text
from warpgeom.manifest import load_manifest
from warpgeom.manifold import CoordVectorField, SamplePlan, euclidean, hyperbolic_chart, sphere_chart
from warpgeom.soliton import (
    concurrent_residual, conformal_fit, einstein_fit, gradient_potential_check, killing_residual, soliton_fit,
    vector_norm,
)
from warpgeom.suites import run_operation, verify_suite


def criterion(label):
    def mark(fn):
        fn.criterion = label
        return fn
    return mark


def _bundled(stem):
    return load_manifest(next(p for p in bundled_manifests() if p.stem == stem))


def _value(res, name):
    return next(m.value for m in res.hypotheses + res.conclusions if m.name == name)


@criterion("1 block formulas agree with the product chart (>=6 warped products, >=50 points)")
def test_criterion_1_block_formulas():
    m = _bundled("family")
    assert len(m.instances) >= 6
    plan = SamplePlan(60, seed=11)
    kinds = set()
    for inst in m.instances.values():
        kinds.add((inst.warped.base.name, inst.warped.fiber.name))
        s1 = verify_suite("S1", inst, plan)
        s2 = verify_suite("S2", inst, plan)
        s3 = verify_suite("S3", inst, plan)
        assert s1.samples >= 50
        assert _value(s1, "connection-blocks-vs-direct") <= 1e-6, inst.name
        assert _value(s3, "lie-blocks-vs-direct") <= 1e-6, inst.name
        assert _value(s2, "base-block") <= 1e-5, inst.name
        assert _value(s2, "fiber-block-f-star") <= 1e-5, inst.name
        assert _value(s2, "mixed-block-zero") <= 1e-7, inst.name
    bases = {b for b, _ in kinds}
    fibers = {f for _, f in kinds}
    assert {"Ir", "Il", "E2"} <= bases and {"S2", "F2", "H2"} <= fibers


@criterion("2 cone soliton: concurrent, Ricci-flat, lambda = 1, gradient potential, shrinking")
def test_criterion_2_cone():
    inst = _bundled("cone").instances["cone"]
    M, z = inst.warped.product, inst.zeta.on_product
    X = inst.warped.sample_points(SamplePlan(64))
    F = Frame(M, X)
    assert concurrent_residual(M, z, F) <= 1e-8
    assert np.abs(F.ricci).max() <= 1e-4
    fit = soliton_fit(M, z, F)
    assert abs(fit.lam - 1) <= 1e-4 and fit.verdict == "shrinking"
    assert gradient_potential_check(M, z, F) <= 1e-6
    s5 = verify_suite("S5", inst)
    assert s5.verdict == "pass" and abs(s5.fitted["lambda"] - 1) <= 1e-4


@criterion("3 concurrence classification: both branches and the coth converse")
def test_criterion_3_classification():
    cone = verify_suite("S4", _bundled("cone").instances["cone"])
    assert cone.verdict == "pass" and cone.info["branch2_residual"] <= 1e-8
    assert cone.info["observed"] == "concurrent"
    flat = _bundled("products").instances["flat"]
    assert concurrent_residual(flat.warped.product, flat.zeta.on_product,
                               flat.warped.sample_points(SamplePlan(64))) <= 1e-8
    s4 = verify_suite("S4", flat)
    assert s4.verdict == "pass" and s4.info["branch1_residual"] <= 1e-8

    coth = _bundled("coth").instances["coth"]
    W = coth.warped
    X = W.sample_points(SamplePlan(64))
    assert run_operation("warp_derivative", W, coth.zeta, expect={"max": 1e-10}).verdict == "pass"
    fj = expr_jets(W.f, X[:, :1])
    zf = coth.zeta.base.values(X[:, :1])[:, 0] * fj.grad[:, 0]
    assert np.abs(zf - fj.value).max() <= 1e-10
    F = Frame(W.product, X)
    T = nabla(F, coth.zeta.on_product) - np.eye(3)[None]
    per_point = vector_norm(F.g, T).max(axis=1)
    far = np.abs(X[:, 0]) >= 0.5
    assert far.all() and (per_point[far] >= 0.1).all()
    assert verify_suite("S4", coth).info["observed"] == "not-concurrent"


@criterion("4 GRW gradient theorem: Riemannian identities hold, Lorentzian runs flag the sign")
def test_criterion_4_grw():
    m = _bundled("grw")
    for f in ("exp", "quad", "cosh"):
        r = verify_suite("S8", m.instances[f"grw_{f}_riem"])
        assert r.verdict == "pass"
        assert _value(r, "hessian-equals-fdot-g") <= 1e-6
        assert _value(r, "ricci-relation-lambda(p)=fdot+mu(p)") <= 1e-4
        lor = verify_suite("S8", m.instances[f"grw_{f}_lor"])
        assert lor.error is None and lor.paper_discrepancy is True


def _fields():
    E2 = euclidean(2)
    S2 = sphere_chart()
    H2 = hyperbolic_chart()
    out = [(E2, [c1, c2]) for c1, c2 in
           [("x", "y"), ("-y", "x"), ("x", "-y"), ("1", "0"), ("x+1", "y-2"), ("y", "x"), ("x^2", "0")]]
    out += [(S2, ["0", "1"]), (S2, ["1", "0"]), (S2, ["sin(phi)", "cos(phi)*cos(theta)/sin(theta)"])]
    out += [(H2, ["1", "0"]), (H2, ["x", "y"]), (H2, ["y", "x"])]
    for stem in ("cone", "coth", "products", "family"):
        for inst in _bundled(stem).instances.values():
            if inst.zeta is not None:
                out.append((inst.warped.product, inst.zeta.on_product))
    return [(M, z if isinstance(z, CoordVectorField) else CoordVectorField.from_strings(M, z)) for M, z in out]


@criterion("5 numeric implications between field classes (>=12 fields)")
def test_criterion_5_implications():
    eps = 1e-6
    fields = _fields()
    assert len(fields) >= 12
    seen = {"concurrent": 0, "killing": 0, "neither": 0}
    for M, z in fields:
        X = M.sample_points(SamplePlan(40, seed=4))
        F = Frame(M, X)
        conc = concurrent_residual(M, z, F)
        kill = killing_residual(M, z, F)
        conf = conformal_fit(M, z, F)
        scale = np.abs(F.g).max(axis=(1, 2))[:, None, None]
        if conc <= eps:
            seen["concurrent"] += 1
            assert np.abs((lie_metric(F, z) - 2 * F.g) / scale).max() <= 10 * eps
            assert gradient_potential_check(M, z, F) <= 10 * eps
        killing_side = kill <= eps
        conformal_side = np.abs(conf.rho).max() <= 10 * eps and conf.residual <= 10 * eps
        assert killing_side == conformal_side, (M.name, [str(c) for c in z.components])
        if killing_side:
            seen["killing"] += 1
        if not killing_side and conc > eps:
            seen["neither"] += 1
    assert all(v > 0 for v in seen.values())


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return str(rng.choice(["x", "y", "z"]))
        return repr(round(float(rng.uniform(0.1, 3.0)), 3))
    a = _random_expr(rng, depth - 1)
    guarded = f"(1.5+({a})^2)"
    op = rng.choice(["+", "-", "*", "/", "^int", "^var", "neg", "sin", "cos", "tan", "sinh", "cosh", "tanh",
                     "coth", "exp", "ln", "sqrt", "abs"])
    if op in ("+", "-", "*"):
        return f"({a}){op}({_random_expr(rng, depth - 1)})"
    if op == "/":
        return f"({_random_expr(rng, depth - 1)})/{guarded}"
    if op == "^int":
        k = int(rng.integers(-2, 4))
        # a negative power is a division and gets the same pole guard
        return f"{guarded}^{k}" if k < 0 else f"({a})^{k}"
    if op == "^var":
        return f"{guarded}^(sin({_random_expr(rng, depth - 1)}))"
    if op == "neg":
        return f"-({a})"
    if op == "tan":
        return f"tan(sin({a}))"
    if op in ("ln", "sqrt", "coth"):
        return f"{op}{guarded}"
    if op == "abs":
        return f"abs({guarded})"
    if op in ("exp", "sinh", "cosh"):
        return f"{op}(sin({a}))"
    return f"{op}({a})"


@criterion("6 parser and jets: 1000 random expressions vs central differences, round trip")
def test_criterion_6_jets():
    rng = np.random.default_rng(2024)
    names = ["x", "y", "z"]
    for case in range(1000):
        text = _random_expr(rng, 4)
        e = parse(text, names)
        assert parse(to_text(e.root), names).root == e.root, text
        p = rng.uniform(-1.5, 1.5, size=(1, 3))
        j = e.jet2_batch(p)
        fd = fd_jet2_batch(e, p)
        g_err = np.abs(j.grad[0] - fd.grad[0])
        assert (g_err <= 1e-6 * (1 + np.abs(j.grad[0]))).all(), (case, text, p)
        h_err = np.abs(j.hess[0] - fd.hess[0])
        assert (h_err <= 1e-4 * (1 + np.abs(j.hess[0]))).all(), (case, text, p)


@criterion("7 bundled manifests give byte-stable reports across runs")
def test_criterion_7_determinism(tmp_path):
    for path in bundled_manifests():
        texts = []
        for run in range(2):
            out = tmp_path / f"{path.stem}-{run}.json"
            assert main(["check", str(path), "--report", str(out)]) == 0
            texts.append("\n".join(l for l in out.read_text().splitlines() if '"generated_at"' not in l))
            json.loads(out.read_text())
        assert texts[0] == texts[1], path.name


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
