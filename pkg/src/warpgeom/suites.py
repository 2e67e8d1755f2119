"""Verification suites S1-S9 and single-operation checks.

Each suite evaluates the hypotheses and conclusions of one warped-product
statement on a concrete instance and returns a :class:`CheckResult`.  A suite
whose hypotheses hold but whose conclusion fails is reported with verdict
``discrepancy`` (and ``paper_discrepancy=True``) instead of raising.
"""

from __future__ import annotations

import math
import traceback
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import Frame, covariant_derivative, expr_jets, hessian, lie_metric, lie_metric_partials
from .manifold import ChartManifold, SamplePlan, ScalarField
from .soliton import (
    concurrent_residual, conformal_fit, einstein_fit, fit_to_metric, gradient_potential_check,
    gradient_soliton_residual, killing_residual, potential_of, soliton_fit, soliton_tensor, vector_norm,
)
from .tolerances import DEFAULT, Tolerances
from .warped import (
    LiftedField, WarpedProduct, build_warped, connection_blocks, f_star, lie_blocks, ricci_blocks,
)

__all__ = [
    "Measurement", "CheckResult", "Instance", "SUITES", "OPERATIONS",
    "resolve_suite", "verify_suite", "run_operation", "FAILING_VERDICTS",
]

FAILING_VERDICTS = ("fail", "error")


@dataclass
class Measurement:
    name: str
    value: float
    tol: float | None = None
    relation: str = "<="  # "<=", ">", ">=", "true", "info"
    mean: float | None = None
    clause: str = ""

    @property
    def passed(self) -> bool | None:
        v = self.value
        if self.relation == "info":
            return None
        if self.relation == "true":
            return bool(v)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return False
        if self.relation == "<=":
            return v <= self.tol
        if self.relation == ">":
            return v > self.tol
        if self.relation == ">=":
            return v >= self.tol
        raise ValueError(f"unknown relation {self.relation!r}")

    def to_dict(self) -> dict:
        out = {"name": self.name, "value": _num(self.value), "relation": self.relation}
        if self.tol is not None:
            out["tol"] = _num(self.tol)
        if self.mean is not None:
            out["mean"] = _num(self.mean)
        if self.clause:
            out["clause"] = self.clause
        out["passed"] = self.passed
        return out


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else repr(v)


@dataclass
class CheckResult:
    id: str
    kind: str
    target: str
    instance: str = ""
    samples: int = 0
    seed: int = 0
    margin: float = 0.0
    hypotheses: list[Measurement] = field(default_factory=list)
    conclusions: list[Measurement] = field(default_factory=list)
    fitted: dict[str, float] = field(default_factory=dict)
    info: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    verdict: str = "pass"
    paper_discrepancy: bool = False
    error: str | None = None

    @property
    def residual_max(self) -> float | None:
        vals = [m.value for m in self.conclusions if m.relation in ("<=", ">=", ">") and m.value is not None]
        return float(max(vals)) if vals else None

    @property
    def residual_mean(self) -> float | None:
        vals = [m.mean for m in self.conclusions if m.relation in ("<=", ">=", ">") and m.mean is not None]
        return float(np.mean(vals)) if vals else None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "target": self.target,
            "instance": self.instance,
            "samples": self.samples,
            "seed": self.seed,
            "margin": _num(self.margin),
            "verdict": self.verdict,
            "paper_discrepancy": self.paper_discrepancy,
            "residual_max": _num(self.residual_max),
            "residual_mean": _num(self.residual_mean),
            "fitted": {k: _num(v) for k, v in self.fitted.items()},
            "hypotheses": [m.to_dict() for m in self.hypotheses],
            "conclusions": [m.to_dict() for m in self.conclusions],
            "info": {k: (_num(v) if not isinstance(v, (str, list)) else v) for k, v in self.info.items()},
            "notes": list(self.notes),
            "error": self.error,
        }


@dataclass(frozen=True, eq=False)
class Instance:
    """Objects a suite is run on; only ``warped`` is always required."""

    name: str
    warped: WarpedProduct
    zeta: LiftedField | None = None
    u: ScalarField | None = None
    lam: float | None = None
    base_point: tuple[float, ...] | None = None
    fiber_point: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Context:
    tol: Tolerances = DEFAULT
    diff: str = "jets"


@dataclass
class Outcome:
    hypotheses: list[Measurement] = field(default_factory=list)
    conclusions: list[Measurement] = field(default_factory=list)
    fitted: dict[str, float] = field(default_factory=dict)
    info: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    verdict: str | None = None


class MissingObjectError(ValueError):
    pass


def _need(inst: Instance, attr: str, suite: str):
    value = getattr(inst, attr)
    if value is None:
        raise MissingObjectError(f"suite {suite} needs '{attr}' in instance {inst.name!r}")
    return value


def _rel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    N = a.shape[0]
    d = np.abs(a - b).reshape(N, -1).max(axis=1)
    scale = np.maximum(1.0, np.abs(b).reshape(N, -1).max(axis=1))
    return d / scale


def _m(name, r, tol, relation="<=", clause=""):
    r = np.asarray(r, dtype=float)
    return Measurement(name, float(r.max()), tol, relation, float(r.mean()), clause)


# --------------------------------------------------------------------------
# S1 - S3: block formulas against the product chart
# --------------------------------------------------------------------------


def _s1(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    F = Frame(W.product, X, ctx.diff)
    n = W.product.dim
    fields = [W.basis(i) for i in range(n)]
    if inst.zeta is not None:
        fields.append(inst.zeta)
    worst = np.zeros(len(X))
    for A in fields:
        for B in fields:
            blocks = connection_blocks(W, A, B, X, ctx.diff)
            direct = covariant_derivative(F, A.on_product, B.on_product)
            worst = np.maximum(worst, _rel(blocks, direct))
    return Outcome(conclusions=[_m("connection-blocks-vs-direct", worst, ctx.tol.exact)],
                   info={"field_pairs": len(fields) ** 2})


def _s2(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    F = Frame(W.product, X, ctx.diff)
    n1 = W.n1
    direct = F.ricci
    B = ricci_blocks(W, X, ctx.diff)
    fs = f_star(W, X[:, :n1], ctx.diff)
    asym = np.abs(direct - np.swapaxes(direct, 1, 2)).max(axis=(1, 2))
    return Outcome(
        conclusions=[
            _m("base-block", _rel(B.base, direct[:, :n1, :n1]), ctx.tol.curvature_oracle),
            _m("fiber-block-f-star", _rel(B.fiber, direct[:, n1:, n1:]), ctx.tol.curvature_oracle),
            _m("mixed-block-zero", np.abs(direct[:, :n1, n1:]).max(axis=(1, 2)), ctx.tol.mixed_block),
        ],
        info={"f_star_min": float(fs.min()), "f_star_max": float(fs.max()),
              "ricci_asymmetry_max": float(asym.max())},
    )


def _s3(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    zeta = _need(inst, "zeta", "S3")
    F = Frame(W.product, X, ctx.diff)
    direct = lie_metric(F, zeta.on_product)
    blocks = lie_blocks(W, zeta, X, ctx.diff).assemble()
    partials = lie_metric_partials(F, zeta.on_product)
    return Outcome(conclusions=[
        _m("lie-blocks-vs-direct", _rel(blocks, direct), ctx.tol.exact),
        _m("e1-vs-coordinate-formula", _rel(direct, partials), ctx.tol.exact),
    ])


# --------------------------------------------------------------------------
# S4, S7: concurrence classification (iff statements)
# --------------------------------------------------------------------------


def _zeta_f(W: WarpedProduct, zeta: LiftedField, X1, diff):
    fj = expr_jets(W.f, X1, diff)
    z1 = zeta.base.values(X1)
    return fj, np.einsum("ni,ni->n", z1, fj.grad)


def _iff_outcome(predicted_residual: float, observed: float, tol: float, info: dict, what: str) -> Outcome:
    predicted = predicted_residual <= tol
    actual = observed <= tol
    info = dict(info)
    info["predicted"] = "concurrent" if predicted else "not-concurrent"
    info["observed"] = "concurrent" if actual else "not-concurrent"
    conclusions = [
        Measurement("product-concurrent-residual", observed, tol, "info"),
        Measurement(f"{what}-agrees-with-direct", float(predicted == actual), relation="true"),
    ]
    return Outcome(conclusions=conclusions, info=info)


def _s4(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    zeta = _need(inst, "zeta", "S4")
    X1, X2 = W.split(X)
    F1 = Frame(W.base, X1, ctx.diff)
    F2 = Frame(W.fiber, X2, ctx.diff)
    fj, zf = _zeta_f(W, zeta, X1, ctx.diff)
    grad_f = np.einsum("nij,nj->ni", F1.ginv, fj.grad)
    r1 = concurrent_residual(W.base, zeta.base, F1)
    r2 = concurrent_residual(W.fiber, zeta.fiber, F2)
    f_const = float(vector_norm(F1.g, grad_f).max())
    z2_norm = float(vector_norm(F2.g, zeta.fiber.values(X2)).max())
    zf_minus_f = float(np.abs(zf - fj.value).max())
    branch1 = max(r1, r2, f_const)
    branch2 = max(r1, z2_norm, zf_minus_f)
    observed = concurrent_residual(W.product, zeta.on_product, X, ctx.diff)
    info = {
        "zeta1_concurrent_residual": r1, "zeta2_concurrent_residual": r2,
        "grad_f_norm_max": f_const, "zeta2_norm_max": z2_norm,
        "zeta1_f_minus_f_max": zf_minus_f,
        "branch1_residual": branch1, "branch2_residual": branch2,
    }
    return _iff_outcome(min(branch1, branch2), observed, ctx.tol.exact, info, "classification")


def _base_signature(W: WarpedProduct, X1) -> int:
    g = W.base.metric_batch(X1)
    return 1 if np.linalg.eigvalsh(g).min() > 0 else -1


def _s7(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    zeta = _need(inst, "zeta", "S7")
    if W.n1 != 1:
        raise ValueError("S7 needs a one-dimensional interval base")
    X1, X2 = W.split(X)
    t = X1[:, 0]
    F2 = Frame(W.fiber, X2, ctx.diff)
    uj = expr_jets(zeta.base.components[0], X1, ctx.diff)
    fj = expr_jets(W.f, X1, ctx.diff)
    shift = uj.value - t
    a = float(shift.mean())
    u_spread = float(np.abs(uj.grad[:, 0] - 1.0).max())
    fdot = float(np.abs(fj.grad[:, 0]).max())
    r_fiber = concurrent_residual(W.fiber, zeta.fiber, F2)
    z2_norm = float(vector_norm(F2.g, zeta.fiber.values(X2)).max())
    ta = t + a
    if (ta > 0).all():
        b = float(np.dot(fj.value, ta) / np.dot(ta, ta))
        linear = float(np.abs(fj.value - b * ta).max())
        if b <= 0:
            linear = max(linear, 1.0)
    else:
        b, linear = float("nan"), float("inf")
    branch1 = max(u_spread, r_fiber, fdot)
    branch2 = max(u_spread, z2_norm, linear)
    observed = concurrent_residual(W.product, zeta.on_product, X, ctx.diff)
    info = {
        "a": a, "b": b, "dot_u_minus_1_max": u_spread, "f_dot_max": fdot,
        "zeta_fiber_concurrent_residual": r_fiber, "zeta_fiber_norm_max": z2_norm,
        "f_minus_b_t_plus_a_max": linear,
        "branch1_residual": branch1, "branch2_residual": branch2,
        "base_signature": _base_signature(W, X1),
    }
    out = _iff_outcome(min(branch1, branch2), observed, ctx.tol.exact, info, "corollary")
    out.fitted = {"a": a, "b": b}
    return out


# --------------------------------------------------------------------------
# S5: concurrent soliton
# --------------------------------------------------------------------------


def _s5(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    zeta = _need(inst, "zeta", "S5")
    tol = ctx.tol
    M = W.product
    F = Frame(M, X, ctx.diff)
    Z = zeta.on_product
    X1, X2 = W.split(X)
    F2 = Frame(W.fiber, X2, ctx.diff)
    conc = concurrent_residual(M, Z, F)
    fit = soliton_fit(M, Z, F, tol=tol)
    lam = fit.lam
    z2 = zeta.fiber.values(X2)
    z2_norm = vector_norm(F2.g, z2)
    zeta2_nonzero = float(z2_norm.max()) > tol.exact
    hyps = [
        Measurement("zeta-concurrent", conc, tol.exact),
        Measurement("ricci-soliton", fit.residual_max, tol.curvature, mean=fit.residual_mean),
        Measurement("zeta2-nonzero", float(z2_norm.max()), tol.exact, "info"),
    ]
    u = potential_of(Z)
    concl = [
        Measurement("lambda-equals-one", abs(lam - 1.0), tol.curvature),
        _m("product-ricci-flat", np.abs(F.ricci).max(axis=(1, 2)), tol.curvature),
        _m("ric-equals-(lambda-1)g", np.abs(F.ricci - (lam - 1.0) * F.g).max(axis=(1, 2)), tol.curvature),
        Measurement("gradient-of-half-norm", gradient_potential_check(M, Z, F), tol.exact),
        Measurement("gradient-soliton-residual", gradient_soliton_residual(M, u, lam, F), tol.curvature),
        Measurement("shrinking", float(fit.verdict == "shrinking"), relation="true"),
    ]
    notes = []
    factor_rel = "<=" if zeta2_nonzero else "info"
    F1 = Frame(W.base, X1, ctx.diff)
    f = W.warping(X1)
    ric2_zz = np.einsum("ni,nij,nj->n", z2, F2.ricci, z2)
    concl += [
        _m("base-ricci-flat", np.abs(F1.ricci).max(axis=(1, 2)), tol.curvature, factor_rel),
        _m("fiber-ricci-flat", np.abs(F2.ricci).max(axis=(1, 2)), tol.curvature, factor_rel),
        _m("fiber-ric2(zeta2,zeta2)", np.abs(ric2_zz) / np.maximum(z2_norm**2, 1.0), tol.exact, factor_rel),
        _m("fiber-einstein-(lambda-1)f^2",
           np.abs(F2.ricci - ((lam - 1.0) * f**2)[:, None, None] * F2.g).max(axis=(1, 2)),
           tol.curvature, factor_rel),
    ]
    if zeta2_nonzero:
        for part, chart, field_, pts in (("base", W.base, zeta.base, F1), ("fiber", W.fiber, zeta.fiber, F2)):
            sf = soliton_fit(chart, field_, pts, tol=tol)
            concl.append(Measurement(f"{part}-soliton-lambda-one", abs(sf.lam - 1.0), tol.curvature))
    else:
        notes.append("zeta2 = 0: factor-level conclusions need zeta2 != 0 and are reported as info")
    return Outcome(hypotheses=hyps, conclusions=concl, notes=notes,
                   fitted={"lambda": lam},
                   info={"soliton_verdict": fit.verdict, "concurrent_residual": conc})


# --------------------------------------------------------------------------
# S6: gradient soliton factorization
# --------------------------------------------------------------------------


def _center(chart: ChartManifold) -> tuple[float, ...]:
    return tuple(0.5 * (a + b) for a, b in chart.domain)


def _s6(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    u = _need(inst, "u", "S6")
    tol = ctx.tol
    M = W.product
    F = Frame(M, X, ctx.diff)
    Hu = hessian(F, u)
    S = Hu + F.ricci
    lam, _, _ = fit_to_metric(F, S)
    if inst.lam is not None:
        lam = float(inst.lam)
    q0 = inst.fiber_point or _center(W.fiber)
    p0 = inst.base_point or _center(W.base)
    X1, X2 = W.split(X)
    n2 = W.n2
    hyps = [_m("gradient-soliton", np.abs(S - lam * F.g).max(axis=(1, 2)), tol.curvature)]

    # u1(x) = u(x, q0) and phi1 = u1 - n2 ln f on the base
    u1 = u.expr.substitute(dict(zip(W.fiber.coords, q0))).rebind(W.base.coords)
    phi1 = u1 - n2 * W.f.apply("ln")
    F1 = Frame(W.base, X1, ctx.diff)
    base_res = hessian(F1, phi1) + F1.ricci - lam * F1.g
    fj = expr_jets(W.f, X1, ctx.diff)
    block = hessian(F1, u1) + F1.ricci - (n2 / fj.value)[:, None, None] * hessian(F1, fj) - lam * F1.g
    defect = n2 * np.abs(np.einsum("ni,nj->nij", fj.grad, fj.grad)).max(axis=(1, 2)) / fj.value**2
    concl = [_m("base-soliton-phi1", np.abs(base_res).max(axis=(1, 2)), tol.curvature)]
    info = {
        "base_block_identity_residual": float(np.abs(block).max()),
        "phi1_defect_n2_df_df_over_f2": float(defect.max()),
        "fiber_point": list(map(float, q0)), "base_point": list(map(float, p0)),
    }

    # phi2(y) = u(p0, y) on the fiber
    f_p0 = W.f.eval(np.asarray(p0, dtype=float))
    fs = f_star(W, np.asarray(p0, dtype=float)[None, :], ctx.diff)[0]
    phi2 = u.expr.substitute(dict(zip(W.base.coords, p0))).rebind(W.fiber.coords)
    F2 = Frame(W.fiber, X2, ctx.diff)
    H2 = hessian(F2, phi2) + F2.ricci
    gf = float(np.abs(fj.grad).max())
    f_constant = gf <= tol.exact
    rel = "<=" if f_constant else "info"
    concl.append(_m("fiber-soliton-phi2-lambda-f2", np.abs(H2 - lam * f_p0**2 * F2.g).max(axis=(1, 2)),
                    tol.curvature, rel))
    info["fiber_lambda2_residual"] = float(np.abs(H2 - (lam * f_p0**2 + fs) * F2.g).max())
    info["f_gradient_max"] = gf
    notes = [] if f_constant else ["f is not constant: fiber factor reported as info only"]
    return Outcome(hyps, concl, {"lambda": lam, "lambda2": lam * f_p0**2 + fs}, info, notes)


# --------------------------------------------------------------------------
# S8: GRW gradient soliton with u = integral of f
# --------------------------------------------------------------------------


def _flip_base(W: WarpedProduct) -> WarpedProduct:
    g = W.base.metric[0][0]
    flipped = ChartManifold(W.base.coords, W.base.domain, ((-g,),), f"flipped {W.base.name}")
    return build_warped(flipped, W.fiber, W.f, name=f"{W.name} (flipped base sign)")


def _grw_measures(W: WarpedProduct, u: ScalarField, X, ctx: Context):
    tol = ctx.tol
    F = Frame(W.product, X, ctx.diff)
    X1, _ = W.split(X)
    uj = F.scalar_jets(u.expr)
    fj = expr_jets(W.f, X1, ctx.diff)
    f, fdot = fj.value, fj.grad[:, 0]
    hyps = [
        Measurement("u-derivative-equals-f", float(np.abs(uj.grad[:, 0] - f).max()), tol.exact),
        Measurement("u-depends-on-t-only", float(np.abs(uj.grad[:, 1:]).max()) if W.n2 else 0.0, tol.exact),
    ]
    H = hessian(F, u.expr)
    S = H + F.ricci
    lam_p = np.einsum("nij,nij->n", F.ginv, S) / F.dim
    mu_p = np.einsum("nij,nij->n", F.ginv, F.ricci) / F.dim
    concl = [
        _m("hessian-equals-fdot-g", np.abs(H - fdot[:, None, None] * F.g).max(axis=(1, 2)), tol.exact),
        _m("ricci-relation-lambda(p)=fdot+mu(p)", np.abs(lam_p - fdot - mu_p), tol.curvature),
    ]
    grad_u = np.einsum("nij,nj->ni", F.ginv, uj.grad)
    f_dt = np.zeros_like(grad_u)
    f_dt[:, 0] = f
    lam, lam_res, _ = fit_to_metric(F, S)
    mu, mu_res, _ = fit_to_metric(F, F.ricci)
    info = {
        "hessian_plus_fdot_g_max": float(np.abs(H + fdot[:, None, None] * F.g).max()),
        "grad_u_minus_f_dt_max": float(vector_norm(F.g, grad_u - f_dt).max()),
        "grad_u_plus_f_dt_max": float(vector_norm(F.g, grad_u + f_dt).max()),
        "soliton_lambda_fit": lam, "soliton_fit_residual_max": float(lam_res.max()),
        "einstein_mu_fit": mu, "einstein_fit_residual_max": float(mu_res.max()),
        "fdot_spread": float(fdot.max() - fdot.min()),
    }
    return hyps, concl, info, lam


def _s8(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    u = _need(inst, "u", "S8")
    if W.n1 != 1:
        raise ValueError("S8 needs a one-dimensional interval base")
    sig = _base_signature(W, X[:, :1])
    hyps, concl, info, lam = _grw_measures(W, u, X, ctx)
    twin = _flip_base(W)
    t_hyps, t_concl, t_info, _ = _grw_measures(twin, ScalarField(twin.product, u.expr), X, ctx)
    own = "riemannian" if sig > 0 else "lorentzian"
    other = "lorentzian" if sig > 0 else "riemannian"
    for k, v in t_info.items():
        info[f"{other}.{k}"] = v
    for m in t_hyps + t_concl:
        info[f"{other}.{m.name}"] = m.value
    info["signature"] = own
    notes = []
    if sig < 0:
        notes.append("Lorentzian base: signature-honest grad u = -f d_t and H^u = -fdot g; "
                     "see hessian_plus_fdot_g_max")
    return Outcome(hyps, concl, {"lambda": lam}, info, notes)


# --------------------------------------------------------------------------
# S9: Einstein conditions (residual reporter)
# --------------------------------------------------------------------------


def _pointwise_einstein(F: Frame) -> np.ndarray:
    mu = np.einsum("nij,nij->n", F.ginv, F.ricci) / F.dim
    return np.abs(F.ricci - mu[:, None, None] * F.g).max(axis=(1, 2))


def _s9(inst: Instance, X, ctx: Context) -> Outcome:
    W = inst.warped
    zeta = _need(inst, "zeta", "S9")
    tol = ctx.tol
    M = W.product
    F = Frame(M, X, ctx.diff)
    Z = zeta.on_product
    X1, X2 = W.split(X)
    F1 = Frame(W.base, X1, ctx.diff)
    F2 = Frame(W.fiber, X2, ctx.diff)
    fj = expr_jets(W.f, X1, ctx.diff)
    f = fj.value
    z1 = zeta.base.values(X1)
    zf = np.einsum("ni,ni->n", z1, fj.grad)

    fit = soliton_fit(M, Z, F, tol=tol)
    lam = float(inst.lam) if inst.lam is not None else fit.lam
    sol_res = np.abs(soliton_tensor(F, Z) - lam * F.g).max(axis=(1, 2))
    hyps: list[Measurement] = []
    concl: list[Measurement] = []
    info: dict[str, object] = {}
    clauses: dict[str, tuple[list, list]] = {}

    def clause(name, h, c):
        clauses[name] = (h, c)
        for m in h + c:
            m.clause = name
        hyps.extend(h)
        concl.extend(c)

    # (a) Einstein iff zeta_i conformal with rho1 = rho2 + 2 zeta1(ln f)
    c1 = conformal_fit(W.base, zeta.base, F1)
    c2 = conformal_fit(W.fiber, zeta.fiber, F2)
    rho_gap = np.abs(c1.rho - c2.rho - 2 * zf / f)
    right = max(c1.residual, c2.residual, float(rho_gap.max()))
    left = float(_pointwise_einstein(F).max())
    clause("einstein-iff-conformal",
           [_m("ricci-soliton", sol_res, tol.curvature)],
           [Measurement("einstein-side-residual", left, tol.curvature, "info"),
            Measurement("conformal-side-residual", right, tol.exact, "info"),
            Measurement("sides-agree", float((left <= tol.curvature) == (right <= tol.exact)), relation="true")])

    # (b) Killing conditions => Einstein
    k1 = killing_residual(W.base, zeta.base, F1)
    k2 = killing_residual(W.fiber, zeta.fiber, F2)
    z1n = float(vector_norm(F1.g, z1).max())
    z2n = float(vector_norm(F2.g, zeta.fiber.values(X2)).max())
    zf_max = float(np.abs(zf).max())
    cond = min(max(z2n, k1), max(z1n, k2), max(k1, k2, zf_max))
    mu_fit, mu_res, _ = fit_to_metric(F, F.ricci)
    clause("killing-implies-einstein",
           [_m("ricci-soliton", sol_res, tol.curvature),
            Measurement("one-killing-condition", cond, tol.exact)],
           [_m("einstein", mu_res, tol.curvature)])
    info["killing.zeta1"] = k1
    info["killing.zeta2"] = k2
    info["killing.zeta1_f_max"] = zf_max

    # (c) base soliton + Einstein fiber + conditions => soliton on M
    base_fit = soliton_fit(W.base, zeta.base, F1, tol=tol)
    fib = einstein_fit(W.fiber, F2)
    rho = 0.5 * c2.rho
    grad_f = np.einsum("nij,nj->ni", F1.ginv, fj.grad)
    gnorm = vector_norm(F1.g, grad_f)
    c_val = float(gnorm.mean())
    lam1 = base_fit.lam
    cond3 = np.abs((lam1 - rho) * f**2 - 2 * f * zf - fib.mu - (W.n2 - 1) * c_val**2)
    sol1_res = np.abs(soliton_tensor(F, Z) - lam1 * F.g).max(axis=(1, 2))
    clause("base-soliton-einstein-fiber",
           [Measurement("base-soliton", base_fit.residual_max, tol.curvature),
            Measurement("fiber-einstein", fib.residual_max, tol.curvature),
            Measurement("zeta2-conformal", c2.residual, tol.exact),
            Measurement("grad-f-norm-constant", float(gnorm.max() - gnorm.min()), tol.exact),
            _m("warping-condition", cond3 / np.maximum(1.0, f**2), tol.exact)],
           [_m("product-soliton-same-lambda", sol1_res, tol.curvature)])
    fs = f_star(W, X1, ctx.diff)
    derived = np.abs((lam1 - rho) * f**2 - f * zf - fib.mu + fs) / np.maximum(1.0, f**2)
    info["warping_condition_derived_residual_max"] = float(derived.max())
    info["base_soliton_lambda"] = lam1
    info["fiber_einstein_mu"] = fib.mu
    info["grad_f_norm_c"] = c_val

    # (d) GRW with concurrent field: fiber Einstein factor against (n-1)c^2
    if W.n1 == 1 and _base_signature(W, X1) < 0:
        conc = concurrent_residual(M, Z, F)
        spread = float(gnorm.max() - gnorm.min())
        info["grw.fiber_mu_fit"] = fib.mu
        info["grw.prediction_n_fiber_dim"] = (W.n2 - 1) * c_val**2
        info["grw.prediction_n_total_dim"] = (M.dim - 1) * c_val**2
        clause("grw-concurrent-einstein-factor",
               [_m("ricci-soliton", sol_res, tol.curvature),
                Measurement("zeta-concurrent", conc, tol.exact),
                Measurement("grad-f-norm-constant", spread, tol.exact)],
               [Measurement("fiber-einstein-residual", fib.residual_max, tol.curvature, "info"),
                Measurement("mu-minus-(n2-1)c2", abs(fib.mu - (W.n2 - 1) * c_val**2), tol.curvature, "info"),
                Measurement("mu-minus-(n-1)c2", abs(fib.mu - (M.dim - 1) * c_val**2), tol.curvature, "info")])

    # the sufficient conditions of (c) may be jointly inconsistent, so that
    # clause is reported but never decides the verdict
    report_only = {"base-soliton-einstein-fiber"}
    statuses = {}
    for name, (h, c) in clauses.items():
        applicable = all(m.passed is not False for m in h)
        holds = all(m.passed is not False for m in c)
        statuses[name] = ("holds" if holds else "discrepancy") if applicable else "not-applicable"
    info["clauses"] = [f"{k}{' (reported only)' if k in report_only else ''}: {v}" for k, v in statuses.items()]
    decisive = [v for k, v in statuses.items() if k not in report_only]
    verdict = "discrepancy" if "discrepancy" in decisive else "pass"
    return Outcome(hyps, concl, {"lambda": lam, "mu": mu_fit}, info, [], verdict)


SUITES: dict[str, tuple[str, Callable]] = {
    "S1": ("prop1-blocks", _s1),
    "S2": ("prop2-blocks", _s2),
    "S3": ("e2-blocks", _s3),
    "S4": ("concurrent-classify", _s4),
    "S5": ("concurrent-soliton", _s5),
    "S6": ("gradient-factorization", _s6),
    "S7": ("grw-concurrent", _s7),
    "S8": ("grw-gradient", _s8),
    "S9": ("einstein-conditions", _s9),
}


def resolve_suite(name: str) -> str:
    key = str(name).strip()
    if key.upper() in SUITES:
        return key.upper()
    for sid, (label, _) in SUITES.items():
        if key.lower() == label:
            return sid
    raise KeyError(f"unknown suite {name!r}; expected one of "
                   + ", ".join(f"{k} ({v[0]})" for k, v in SUITES.items()))


def _verdict(out: Outcome) -> str:
    if out.verdict is not None:
        return out.verdict
    hyp_ok = all(m.passed is not False for m in out.hypotheses)
    con_ok = all(m.passed is not False for m in out.conclusions)
    if hyp_ok and con_ok:
        return "pass"
    return "discrepancy" if hyp_ok else "fail"


def verify_suite(suite: str, inst: Instance, plan: SamplePlan = SamplePlan(),
                 tol: Tolerances = DEFAULT, diff: str = "jets", check_id: str | None = None) -> CheckResult:
    sid = resolve_suite(suite)
    label, fn = SUITES[sid]
    res = CheckResult(check_id or f"{sid}:{inst.name}", "suite", f"{sid} {label}", inst.name,
                      plan.count, plan.seed, plan.margin)
    try:
        X = inst.warped.sample_points(plan)
        out = fn(inst, X, Context(tol, diff))
    except Exception as exc:  # recorded per check; the run continues
        res.verdict = "error"
        res.error = f"{type(exc).__name__}: {exc}"
        res.notes.append(traceback.format_exception_only(type(exc), exc)[-1].strip())
        return res
    res.hypotheses, res.conclusions = out.hypotheses, out.conclusions
    res.fitted, res.info, res.notes = out.fitted, out.info, out.notes
    res.verdict = _verdict(out)
    res.paper_discrepancy = res.verdict == "discrepancy"
    return res


# --------------------------------------------------------------------------
# single operations
# --------------------------------------------------------------------------


def _op_killing(M, zeta, u, lam, X, ctx):
    return killing_residual(M, zeta, X, ctx.diff), {}, ctx.tol.exact


def _op_conformal(M, zeta, u, lam, X, ctx):
    c = conformal_fit(M, zeta, X, ctx.diff)
    return c.residual, {"rho_mean": c.rho_mean, "rho_spread": c.spread}, ctx.tol.exact


def _op_concurrent(M, zeta, u, lam, X, ctx):
    return concurrent_residual(M, zeta, X, ctx.diff), {}, ctx.tol.exact


def _op_gradient_potential(M, zeta, u, lam, X, ctx):
    return gradient_potential_check(M, zeta, X, ctx.diff), {}, ctx.tol.exact


def _op_soliton_fit(M, zeta, u, lam, X, ctx):
    fit = soliton_fit(M, zeta, X, ctx.diff, ctx.tol)
    return fit.residual_max, {"lambda": fit.lam, "verdict": fit.verdict,
                              "residual_mean": fit.residual_mean}, ctx.tol.curvature


def _op_einstein_fit(M, zeta, u, lam, X, ctx):
    fit = einstein_fit(M, X, ctx.diff)
    return fit.residual_max, {"mu": fit.mu, "residual_mean": fit.residual_mean}, ctx.tol.curvature


def _op_gradient_soliton(M, zeta, u, lam, X, ctx):
    if u is None or lam is None:
        raise MissingObjectError("gradient_soliton needs targets 'u' and 'lambda'")
    return gradient_soliton_residual(M, u, lam, X, ctx.diff), {}, ctx.tol.curvature


OPERATIONS = {
    "killing": (_op_killing, True),
    "conformal": (_op_conformal, True),
    "concurrent": (_op_concurrent, True),
    "gradient_potential": (_op_gradient_potential, True),
    "soliton_fit": (_op_soliton_fit, True),
    "einstein_fit": (_op_einstein_fit, False),
    "gradient_soliton": (_op_gradient_soliton, False),
    "warp_derivative": (None, True),
}


def run_operation(op: str, target, zeta=None, u: ScalarField | None = None, lam: float | None = None,
                  plan: SamplePlan = SamplePlan(), tol: Tolerances = DEFAULT, diff: str = "jets",
                  expect: dict | None = None, check_id: str | None = None, target_name: str = "") -> CheckResult:
    """Run one residual operation on a chart or warped product and compare to ``expect``.

    ``expect`` keys: ``max``/``min`` bounds on the residual (default
    ``max`` = the operation's pass tolerance), ``lambda``/``mu`` expected
    fitted constants (checked at the curvature tolerance) and ``verdict``.
    """
    res = CheckResult(check_id or f"{op}:{target_name}", "op", op, target_name,
                      plan.count, plan.seed, plan.margin)
    expect = dict(expect or {})
    try:
        if op not in OPERATIONS:
            raise KeyError(f"unknown operation {op!r}; expected one of {sorted(OPERATIONS)}")
        fn, needs_field = OPERATIONS[op]
        ctx = Context(tol, diff)
        if isinstance(target, WarpedProduct):
            M = target.product
            X = target.sample_points(plan)
        else:
            M = target
            X = target.sample_points(plan)
        if needs_field and zeta is None:
            raise MissingObjectError(f"operation {op} needs a 'field' target")
        if op == "warp_derivative":
            if not isinstance(target, WarpedProduct) or not isinstance(zeta, LiftedField):
                raise MissingObjectError("warp_derivative needs a warped product and a lifted field")
            fj, zf = _zeta_f(target, zeta, target.split(X)[0], diff)
            value, info, default = float(np.abs(zf - fj.value).max()), {}, tol.exact
        else:
            field_ = zeta.on_product if isinstance(zeta, LiftedField) else zeta
            value, info, default = fn(M, field_, u, lam, X, ctx)
        res.info.update({k: v for k, v in info.items() if k not in ("lambda", "mu")})
        res.fitted.update({k: v for k, v in info.items() if k in ("lambda", "mu")})
        if "min" in expect:
            res.conclusions.append(Measurement(op, value, float(expect["min"]), ">="))
        if "max" in expect or "min" not in expect:
            res.conclusions.append(Measurement(op, value, float(expect.get("max", default)), "<="))
        for key in ("lambda", "mu"):
            if key in expect:
                res.conclusions.append(Measurement(f"{key}-matches", abs(info[key] - float(expect[key])),
                                                   float(expect.get(f"{key}_tol", tol.curvature))))
        if "verdict" in expect:
            res.conclusions.append(Measurement(f"verdict-is-{expect['verdict']}",
                                               float(info.get("verdict") == expect["verdict"]), relation="true"))
        res.verdict = "pass" if all(m.passed is not False for m in res.conclusions) else "fail"
    except Exception as exc:
        res.verdict = "error"
        res.error = f"{type(exc).__name__}: {exc}"
    return res
