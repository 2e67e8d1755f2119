"""Residual classification of vector fields and least-squares soliton fits.

All routines take a chart, the objects under test and a batch of sample
points (or an existing :class:`~warpgeom.calculus.Frame` on those points) and
return residuals that are zero exactly when the corresponding identity holds.

Vector norms use ``|g|``, the metric with its eigenvalues replaced by their
absolute values, so that they stay positive definite in Lorentzian charts and
coincide with the metric norm in Riemannian ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import Frame, gradient, hessian, lie_metric, nabla
from .expr import Expr, Num
from .manifold import ChartManifold, CoordVectorField, ScalarField
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "FieldClassification", "ConformalFit", "SolitonFit", "EinsteinFit",
    "abs_metric", "vector_norm", "frame_for",
    "killing_residual", "conformal_fit", "concurrent_residual",
    "potential_of", "gradient_potential_check", "soliton_tensor", "fit_to_metric",
    "soliton_fit", "einstein_fit", "gradient_soliton_residual", "classify_field",
    "soliton_verdict",
]


def frame_for(M: ChartManifold, samples, diff: str = "jets") -> Frame:
    if isinstance(samples, Frame):
        return samples
    return Frame(M, samples, diff)


def abs_metric(g: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(g)
    return np.einsum("...ik,...k,...jk->...ij", V, np.abs(w), V)


def vector_norm(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``sqrt(v^T |g| v)`` along the last axis of ``v``."""
    G = abs_metric(g)
    if v.ndim == G.ndim:  # (N, m, n): several vectors per point
        q = np.einsum("nmi,nij,nmj->nm", v, G, v)
    else:
        q = np.einsum("ni,nij,nj->n", v, G, v)
    return np.sqrt(np.maximum(q, 0.0))


def _gscale(g: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(g).max(axis=(1, 2)), 1e-300)


def killing_residual(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets") -> float:
    """Max of ``|g(D_i zeta, d_i)|`` and ``|L_zeta g|/2`` relative to ``max |g_ij|``."""
    F = frame_for(M, samples, diff)
    T = nabla(F, zeta)
    diag = np.einsum("nik,nki->ni", T, F.g)
    scale = _gscale(F.g)
    r1 = np.abs(diag).max(axis=1) / scale
    r2 = 0.5 * np.abs(lie_metric(F, zeta)).max(axis=(1, 2)) / scale
    return float(max(r1.max(), r2.max()))


@dataclass(frozen=True)
class ConformalFit:
    rho: np.ndarray
    residual: float
    spread: float

    @property
    def rho_mean(self) -> float:
        return float(self.rho.mean())

    def is_conformal(self, tol: float) -> bool:
        return self.residual <= tol

    def is_killing(self, tol: float) -> bool:
        return self.residual <= tol and float(np.abs(self.rho).max()) <= tol

    def is_homothetic(self, tol: float) -> bool:
        return self.residual <= tol and self.spread <= tol and not self.is_killing(tol)


def conformal_fit(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets") -> ConformalFit:
    """Pointwise factor ``rho = tr(g^-1 L_zeta g) / dim`` and ``|L - rho g|``."""
    F = frame_for(M, samples, diff)
    L = lie_metric(F, zeta)
    rho = np.einsum("nij,nij->n", F.ginv, L) / F.dim
    resid = np.abs(L - rho[:, None, None] * F.g).max(axis=(1, 2)) / _gscale(F.g)
    return ConformalFit(rho, float(resid.max()), float(rho.max() - rho.min()))


def concurrent_residual(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets") -> float:
    """Max over samples and basis directions of ``|D_i zeta - d_i|``."""
    F = frame_for(M, samples, diff)
    T = nabla(F, zeta) - np.eye(F.dim)[None]
    return float(vector_norm(F.g, T).max())


def potential_of(zeta: CoordVectorField) -> ScalarField:
    """``u = 1/2 g_ij zeta^i zeta^j`` as an expression on the chart."""
    chart = zeta.chart
    n = chart.dim
    terms = []
    for i in range(n):
        for j in range(i, n):
            gij = chart.metric[i][j]
            zi, zj = zeta.components[i], zeta.components[j]
            if any(isinstance(e.root, Num) and e.root.value == 0.0 for e in (gij, zi, zj)):
                continue
            terms.append((0.5 if i == j else 1.0) * gij * zi * zj)
    u = Expr(Num(0.0), chart.coords)
    for t in terms:
        u = t if isinstance(u.root, Num) and u.root.value == 0.0 else u + t
    return ScalarField(chart, u)


def gradient_potential_check(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets") -> float:
    """Max of ``|zeta - grad(1/2 g(zeta, zeta))|``."""
    F = frame_for(M, samples, diff)
    vals, _ = F.field(zeta)
    grad_u = gradient(F, potential_of(zeta))
    return float(vector_norm(F.g, vals - grad_u).max())


def soliton_tensor(F: Frame, zeta: CoordVectorField) -> np.ndarray:
    """``1/2 L_zeta g + Ric`` at the frame points."""
    return 0.5 * lie_metric(F, zeta) + F.ricci


def fit_to_metric(F: Frame, S: np.ndarray):
    """Least-squares ``S ~ c g`` under ``<A, B>_g = g^ik g^jl A_ij B_kl``.

    Returns the global constant, per-point residuals ``max |S - c g|`` and the
    pointwise factors ``tr(g^-1 S) / dim``.
    """
    pointwise = np.einsum("nij,nij->n", F.ginv, S) / F.dim
    c = float(pointwise.mean())
    resid = np.abs(S - c * F.g).max(axis=(1, 2))
    return c, resid, pointwise


def soliton_verdict(lam: float, residual_max: float, tol: Tolerances = DEFAULT) -> str:
    if residual_max > tol.non_soliton:
        return "not-a-soliton"
    if lam > tol.exact:
        return "shrinking"
    if lam < -tol.exact:
        return "expanding"
    return "steady"


@dataclass(frozen=True)
class SolitonFit:
    lam: float
    residual_max: float
    residual_mean: float
    verdict: str


@dataclass(frozen=True)
class EinsteinFit:
    mu: float
    residual_max: float
    residual_mean: float


def soliton_fit(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets",
                tol: Tolerances = DEFAULT) -> SolitonFit:
    F = frame_for(M, samples, diff)
    lam, resid, _ = fit_to_metric(F, soliton_tensor(F, zeta))
    rmax = float(resid.max())
    return SolitonFit(lam, rmax, float(resid.mean()), soliton_verdict(lam, rmax, tol))


def einstein_fit(M: ChartManifold, samples, diff: str = "jets") -> EinsteinFit:
    F = frame_for(M, samples, diff)
    mu, resid, _ = fit_to_metric(F, F.ricci)
    return EinsteinFit(mu, float(resid.max()), float(resid.mean()))


def gradient_soliton_residual(M: ChartManifold, u, lam: float, samples, diff: str = "jets") -> float:
    """Max of ``|H^u + Ric - lam g|``."""
    F = frame_for(M, samples, diff)
    R = hessian(F, u) + F.ricci - lam * F.g
    return float(np.abs(R).max())


@dataclass(frozen=True)
class FieldClassification:
    killing_residual: float
    rho: np.ndarray
    rho_spread: float
    conformal_residual: float
    concurrent_residual: float
    gradient_potential_residual: float

    def labels(self, tol: float) -> list[str]:
        out = []
        if self.killing_residual <= tol:
            out.append("killing")
        if self.conformal_residual <= tol:
            out.append("conformal")
            if self.rho_spread <= tol and np.abs(self.rho).max() > tol:
                out.append("homothetic")
        if self.concurrent_residual <= tol:
            out.append("concurrent")
        if self.gradient_potential_residual <= tol:
            out.append("gradient-of-half-norm")
        return out


def classify_field(M: ChartManifold, zeta: CoordVectorField, samples, diff: str = "jets") -> FieldClassification:
    F = frame_for(M, samples, diff)
    conf = conformal_fit(M, zeta, F)
    return FieldClassification(
        killing_residual=killing_residual(M, zeta, F),
        rho=conf.rho,
        rho_spread=conf.spread,
        conformal_residual=conf.residual,
        concurrent_residual=concurrent_residual(M, zeta, F),
        gradient_potential_residual=gradient_potential_check(M, zeta, F),
    )
