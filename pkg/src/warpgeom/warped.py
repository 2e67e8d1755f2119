"""Warped products ``B x_f F`` with metric ``g_B + f^2 g_F`` and block formulas.

The block evaluators here use only base and fiber quantities (their own
frames, the warping function's base jets).  They never touch the product
chart, so comparing them with :mod:`warpgeom.calculus` on ``W.product`` is a
genuine two-route check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import Frame, covariant_derivative, expr_jets, gradient, hessian, laplacian, lie_metric
from .expr import Expr, Num
from .manifold import ChartManifold, CoordVectorField, SamplePlan, as_expr

__all__ = [
    "WarpedProduct", "LiftedField", "BlockTensor", "NonPositiveWarpingError",
    "build_warped", "f_star", "connection_blocks", "ricci_blocks", "lie_blocks",
    "f_star_at", "connection_blocks_at", "ricci_blocks_at", "lie_blocks_at",
]


class NonPositiveWarpingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WarpedProduct:
    base: ChartManifold
    fiber: ChartManifold
    f: Expr
    product: ChartManifold
    name: str = ""

    @property
    def n1(self) -> int:
        return self.base.dim

    @property
    def n2(self) -> int:
        return self.fiber.dim

    def split(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X[:, : self.n1], X[:, self.n1:]

    def warping(self, X1) -> np.ndarray:
        return self.f.eval_batch(np.atleast_2d(X1))

    def check_positive(self, X) -> None:
        X1, _ = self.split(X)
        v, bad = self.f.eval_masked(X1)
        bad |= ~(v > 0)
        if bad.any():
            p = X1[np.argmax(bad)]
            raise NonPositiveWarpingError(
                f"warping function {self.f} is not positive at base point {tuple(p)}")

    def sample_points(self, plan: SamplePlan) -> np.ndarray:
        X = self.product.sample_points(plan)
        self.check_positive(X)
        return X

    def lift(self, base_components, fiber_components, consts=None) -> "LiftedField":
        return LiftedField(
            self,
            CoordVectorField.from_strings(self.base, base_components, consts),
            CoordVectorField.from_strings(self.fiber, fiber_components, consts),
        )

    def basis(self, i: int) -> "LiftedField":
        """Lift of the i-th product coordinate vector field."""
        if i < self.n1:
            return LiftedField(self, CoordVectorField.basis(self.base, i), CoordVectorField.zero(self.fiber))
        return LiftedField(self, CoordVectorField.zero(self.base), CoordVectorField.basis(self.fiber, i - self.n1))


def build_warped(base: ChartManifold, fiber: ChartManifold, f, consts=None, name: str = "") -> WarpedProduct:
    """Assemble ``base x_f fiber``; ``f`` may only depend on base coordinates."""
    clash = set(base.coords) & set(fiber.coords)
    if clash:
        raise ValueError(f"base and fiber share coordinate names {sorted(clash)}; rename one chart")
    f = as_expr(f, base.coords, consts)
    coords = base.coords + fiber.coords
    n1, n2 = base.dim, fiber.dim
    f2 = f.rebind(coords) ** 2
    zero = Expr(Num(0.0), coords)
    rows = [[zero] * (n1 + n2) for _ in range(n1 + n2)]
    for i in range(n1):
        for j in range(n1):
            rows[i][j] = base.metric[i][j].rebind(coords)
    for a in range(n2):
        for b in range(a, n2):
            entry = fiber.metric[a][b]
            if isinstance(entry.root, Num) and entry.root.value == 0.0:
                rows[n1 + a][n1 + b] = zero
            else:
                rows[n1 + a][n1 + b] = f2 * entry.rebind(coords)
            rows[n1 + b][n1 + a] = rows[n1 + a][n1 + b]
    domain = base.domain + fiber.domain
    label = name or f"{base.name} x_[{f}] {fiber.name}"
    product = ChartManifold(coords, domain, tuple(tuple(r) for r in rows), label)
    return WarpedProduct(base, fiber, f, product, label)


@dataclass(frozen=True, eq=False)
class LiftedField:
    """``zeta = zeta1 + zeta2`` with ``zeta1`` on the base and ``zeta2`` on the fiber."""

    warped: WarpedProduct
    base: CoordVectorField
    fiber: CoordVectorField

    @property
    def on_product(self) -> CoordVectorField:
        coords = self.warped.product.coords
        comps = tuple(c.rebind(coords) for c in self.base.components + self.fiber.components)
        return CoordVectorField(self.warped.product, comps)


@dataclass(frozen=True)
class BlockTensor:
    base: np.ndarray
    fiber: np.ndarray
    mixed: np.ndarray

    def assemble(self) -> np.ndarray:
        top = np.concatenate([self.base, self.mixed], axis=-1)
        bottom = np.concatenate([np.swapaxes(self.mixed, -1, -2), self.fiber], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


# --------------------------------------------------------------------------
# batched block formulas
# --------------------------------------------------------------------------


class _Parts:
    """Base/fiber frames and warping jets for a batch of product points."""

    def __init__(self, W: WarpedProduct, X, diff: str):
        X1, X2 = W.split(X)
        self.W = W
        self.F1 = Frame(W.base, X1, diff)
        self.F2 = Frame(W.fiber, X2, diff)
        self.fjet = expr_jets(W.f, X1, diff)
        self.f = self.fjet.value
        self.df = self.fjet.grad


def f_star(W: WarpedProduct, X1, diff: str = "jets") -> np.ndarray:
    """``f * Lap(f) + (n2 - 1) |grad f|^2`` on the base."""
    F1 = Frame(W.base, X1, diff)
    fj = expr_jets(W.f, F1.points, diff)
    grad_f = gradient(F1, fj)
    norm2 = np.einsum("ni,nij,nj->n", grad_f, F1.g, grad_f)
    return fj.value * laplacian(F1, fj) + (W.n2 - 1) * norm2


def connection_blocks(W: WarpedProduct, Xf: LiftedField, Yf: LiftedField, X, diff: str = "jets") -> np.ndarray:
    """``D_X Y`` on the product assembled from base/fiber connections.

    base part:  D1_{X1} Y1 - f g2(X2, Y2) grad f
    fiber part: (X1 f / f) Y2 + (Y1 f / f) X2 + D2_{X2} Y2
    """
    P = _Parts(W, X, diff)
    x1, _ = P.F1.field(Xf.base)
    y1, _ = P.F1.field(Yf.base)
    x2, _ = P.F2.field(Xf.fiber)
    y2, _ = P.F2.field(Yf.fiber)
    grad_f = np.einsum("nij,nj->ni", P.F1.ginv, P.df)
    g2xy = np.einsum("ni,nij,nj->n", x2, P.F2.g, y2)
    base = covariant_derivative(P.F1, Xf.base, Yf.base) - (P.f * g2xy)[:, None] * grad_f
    xf = np.einsum("ni,ni->n", x1, P.df) / P.f
    yf = np.einsum("ni,ni->n", y1, P.df) / P.f
    fiber = xf[:, None] * y2 + yf[:, None] * x2 + covariant_derivative(P.F2, Xf.fiber, Yf.fiber)
    return np.concatenate([base, fiber], axis=1)


def ricci_blocks(W: WarpedProduct, X, diff: str = "jets") -> BlockTensor:
    """Ricci of the product from ``Ric1 - (n2/f) H^f``, ``0`` and ``Ric2 - f* g2``."""
    P = _Parts(W, X, diff)
    Hf = hessian(P.F1, P.fjet)
    base = P.F1.ricci - (W.n2 / P.f)[:, None, None] * Hf
    grad_f = np.einsum("nij,nj->ni", P.F1.ginv, P.df)
    fstar = P.f * np.einsum("nij,nij->n", P.F1.ginv, Hf) + (W.n2 - 1) * np.einsum("ni,ni->n", grad_f, P.df)
    fiber = P.F2.ricci - fstar[:, None, None] * P.F2.g
    mixed = np.zeros((len(P.f), W.n1, W.n2))
    return BlockTensor(base, fiber, mixed)


def lie_blocks(W: WarpedProduct, zeta: LiftedField, X, diff: str = "jets") -> BlockTensor:
    """``L_zeta g`` from ``L1 g1``, ``f^2 L2 g2 + 2 f zeta1(f) g2`` and a zero mixed block."""
    P = _Parts(W, X, diff)
    z1, _ = P.F1.field(zeta.base)
    zf = np.einsum("ni,ni->n", z1, P.df)
    base = lie_metric(P.F1, zeta.base)
    fiber = (P.f**2)[:, None, None] * lie_metric(P.F2, zeta.fiber) + (2 * P.f * zf)[:, None, None] * P.F2.g
    mixed = np.zeros((len(P.f), W.n1, W.n2))
    return BlockTensor(base, fiber, mixed)


# --------------------------------------------------------------------------
# single-point API
# --------------------------------------------------------------------------


def _pt(p) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(1, -1)


def f_star_at(W: WarpedProduct, p1, diff: str = "jets") -> float:
    return float(f_star(W, _pt(p1), diff)[0])


def connection_blocks_at(W: WarpedProduct, X: LiftedField, Y: LiftedField, p, diff: str = "jets") -> np.ndarray:
    return connection_blocks(W, X, Y, _pt(p), diff)[0]


def ricci_blocks_at(W: WarpedProduct, p, diff: str = "jets") -> BlockTensor:
    b = ricci_blocks(W, _pt(p), diff)
    return BlockTensor(b.base[0], b.fiber[0], b.mixed[0])


def lie_blocks_at(W: WarpedProduct, zeta: LiftedField, p, diff: str = "jets") -> BlockTensor:
    b = lie_blocks(W, zeta, _pt(p), diff)
    return BlockTensor(b.base[0], b.fiber[0], b.mixed[0])
