"""Connection and curvature on a chart, evaluated over batches of points.

A :class:`Frame` holds the metric, its inverse, its first and second partial
derivatives and the Christoffel symbols at a batch of points.  Everything else
(covariant derivatives, Ricci, Hessians, Lie derivatives) is a contraction of
frame data with field jets.  The ``*_at`` functions are single-point
conveniences over the batched versions.

Derivatives come from forward-mode jets (``diff="jets"``) or, as an
independent check, from central differences (``diff="fd"``).
"""

from __future__ import annotations

from functools import cached_property
from typing import Union

import numpy as np

from . import _kernels
from .expr import Expr, Jet2, fd_jet2_batch
from .manifold import (ChartManifold, CoordVectorField, DegenerateMetricError, ScalarField,
                       degenerate_mask)

__all__ = [
    "Frame", "expr_jets", "field_jets",
    "covariant_derivative", "nabla", "lie_metric", "lie_metric_partials",
    "gradient", "hessian", "laplacian", "scalar_curvature",
    "christoffel_at", "covariant_derivative_at", "ricci_at", "scalar_curvature_at",
    "gradient_at", "hessian_at", "laplacian_at", "lie_metric_at",
]

DIFF_MODES = ("jets", "fd")

Scalar = Union[ScalarField, Expr, Jet2]


def expr_jets(expr: Expr, X: np.ndarray, diff: str = "jets") -> Jet2:
    if diff == "jets":
        return expr.jet2_batch(X)
    if diff == "fd":
        return fd_jet2_batch(expr, X)
    raise ValueError(f"unknown differentiation mode {diff!r}; expected one of {DIFF_MODES}")


def metric_jets(chart: ChartManifold, X: np.ndarray, diff: str = "jets"):
    N, n = X.shape[0], chart.dim
    g = np.empty((N, n, n))
    dg = np.empty((N, n, n, n))
    d2g = np.empty((N, n, n, n, n))
    for i in range(n):
        for j in range(i, n):
            jet = expr_jets(chart.metric[i][j], X, diff)
            for a, b in {(i, j), (j, i)}:
                g[:, a, b] = jet.value
                dg[:, :, a, b] = jet.grad
                d2g[:, :, :, a, b] = jet.hess
    return g, dg, d2g


def field_jets(field: CoordVectorField, X: np.ndarray, diff: str = "jets"):
    """Field values ``(N, n)`` and first partials ``d[:, k, i] = d_i zeta^k``."""
    jets = [expr_jets(c, X, diff) for c in field.components]
    vals = np.stack([j.value for j in jets], axis=1)
    d = np.stack([j.grad for j in jets], axis=1)
    return vals, d


class Frame:
    """Metric data and Christoffel symbols at a batch of points of one chart."""

    def __init__(self, chart: ChartManifold, points, diff: str = "jets"):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if X.shape[1] != chart.dim:
            raise ValueError(f"points have dimension {X.shape[1]}, chart has {chart.dim}")
        self.chart = chart
        self.points = X
        self.diff = diff
        self.g, self.dg, self.d2g = metric_jets(chart, X, diff)
        bad = degenerate_mask(self.g)
        if bad.any():
            p = X[np.argmax(bad)]
            raise DegenerateMetricError(f"{chart!r}: degenerate metric at {tuple(p)}")
        self.ginv = np.linalg.inv(self.g)
        self.gamma = _kernels.christoffel(self.ginv, self.dg)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.chart.dim

    @cached_property
    def dgamma(self) -> np.ndarray:
        return _kernels.christoffel_grad(self.ginv, self.dg, self.d2g)

    @cached_property
    def ricci(self) -> np.ndarray:
        return _kernels.ricci(self.gamma, self.dgamma)

    def scalar_jets(self, u: Scalar) -> Jet2:
        if isinstance(u, Jet2):
            return u
        expr = u.expr if isinstance(u, ScalarField) else u
        if expr.vars != self.chart.coords:
            expr = expr.rebind(self.chart.coords)
        return expr_jets(expr, self.points, self.diff)

    def field(self, zeta: CoordVectorField):
        if zeta.chart is not self.chart and zeta.chart.coords != self.chart.coords:
            raise ValueError("vector field lives on a different chart")
        return field_jets(zeta, self.points, self.diff)


# --------------------------------------------------------------------------
# batched operations
# --------------------------------------------------------------------------


def nabla(frame: Frame, zeta: CoordVectorField) -> np.ndarray:
    """``T[:, i, k] = (D_{d_i} zeta)^k = d_i zeta^k + Gamma^k_ij zeta^j``."""
    vals, d = frame.field(zeta)
    return np.swapaxes(d, 1, 2) + np.einsum("nkij,nj->nik", frame.gamma, vals)


def covariant_derivative(frame: Frame, X: CoordVectorField, zeta: CoordVectorField) -> np.ndarray:
    xv, _ = frame.field(X)
    return np.einsum("ni,nik->nk", xv, nabla(frame, zeta))


def lie_metric(frame: Frame, zeta: CoordVectorField) -> np.ndarray:
    """``(L_zeta g)_ij = g(D_i zeta, d_j) + g(d_i, D_j zeta)``."""
    a = np.einsum("nik,nkj->nij", nabla(frame, zeta), frame.g)
    return a + np.swapaxes(a, 1, 2)


def lie_metric_partials(frame: Frame, zeta: CoordVectorField) -> np.ndarray:
    """Coordinate formula ``zeta^k d_k g_ij + g_kj d_i zeta^k + g_ik d_j zeta^k``."""
    vals, d = frame.field(zeta)
    a = np.einsum("nk,nkij->nij", vals, frame.dg)
    b = np.einsum("nkj,nki->nij", frame.g, d)
    return a + b + np.swapaxes(b, 1, 2)


def gradient(frame: Frame, u: Scalar) -> np.ndarray:
    return np.einsum("nij,nj->ni", frame.ginv, frame.scalar_jets(u).grad)


def hessian(frame: Frame, u: Scalar) -> np.ndarray:
    jet = frame.scalar_jets(u)
    return jet.hess - np.einsum("nkij,nk->nij", frame.gamma, jet.grad)


def laplacian(frame: Frame, u: Scalar) -> np.ndarray:
    return np.einsum("nij,nij->n", frame.ginv, hessian(frame, u))


def scalar_curvature(frame: Frame) -> np.ndarray:
    return np.einsum("nij,nij->n", frame.ginv, frame.ricci)


# --------------------------------------------------------------------------
# single-point API
# --------------------------------------------------------------------------


def _frame(M: ChartManifold, p, diff: str) -> Frame:
    return Frame(M, np.asarray(p, dtype=float).reshape(1, -1), diff)


def christoffel_at(M: ChartManifold, p, diff: str = "jets") -> np.ndarray:
    """``Gamma[k, i, j]`` at ``p``."""
    return _frame(M, p, diff).gamma[0]


def covariant_derivative_at(M: ChartManifold, X: CoordVectorField, zeta: CoordVectorField,
                            p, diff: str = "jets") -> np.ndarray:
    return covariant_derivative(_frame(M, p, diff), X, zeta)[0]


def ricci_at(M: ChartManifold, p, diff: str = "jets") -> np.ndarray:
    return _frame(M, p, diff).ricci[0]


def scalar_curvature_at(M: ChartManifold, p, diff: str = "jets") -> float:
    return float(scalar_curvature(_frame(M, p, diff))[0])


def gradient_at(M: ChartManifold, u: Scalar, p, diff: str = "jets") -> np.ndarray:
    return gradient(_frame(M, p, diff), u)[0]


def hessian_at(M: ChartManifold, u: Scalar, p, diff: str = "jets") -> np.ndarray:
    return hessian(_frame(M, p, diff), u)[0]


def laplacian_at(M: ChartManifold, u: Scalar, p, diff: str = "jets") -> float:
    return float(laplacian(_frame(M, p, diff), u)[0])


def lie_metric_at(M: ChartManifold, zeta: CoordVectorField, p, diff: str = "jets") -> np.ndarray:
    return lie_metric(_frame(M, p, diff), zeta)[0]
