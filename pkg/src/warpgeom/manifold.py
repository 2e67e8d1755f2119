"""Single-chart (pseudo-)Riemannian manifolds, coordinate fields and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .expr import Expr, Num, parse, constant

__all__ = [
    "ChartManifold", "CoordVectorField", "ScalarField", "SamplePlan",
    "DegenerateMetricError", "SamplingExhaustedError",
    "euclidean", "sphere_chart", "hyperbolic_chart", "interval",
    "degenerate_mask", "as_expr",
]

DEGENERACY_THRESHOLD = 1e-12

ExprLike = Union[Expr, str, int, float]


class DegenerateMetricError(ArithmeticError):
    pass


class SamplingExhaustedError(RuntimeError):
    pass


def as_expr(value: ExprLike, coords: Sequence[str], consts: Mapping[str, float] | None = None) -> Expr:
    coords = tuple(coords)
    if isinstance(value, Expr):
        return value if value.vars == coords else value.rebind(coords)
    if isinstance(value, bool):
        raise TypeError("boolean is not an expression")
    if isinstance(value, (int, float)):
        return constant(float(value), coords)
    return parse(str(value), coords, consts)


def degenerate_mask(g: np.ndarray) -> np.ndarray:
    """True where ``|det g| < 1e-12 * (max |g_ij|)^dim``."""
    n = g.shape[-1]
    scale = np.abs(g).max(axis=(-2, -1))
    det = np.linalg.det(g)
    return ~(np.abs(det) >= DEGENERACY_THRESHOLD * scale**n) | (scale == 0)


@dataclass(frozen=True)
class SamplePlan:
    count: int = 64
    seed: int = 0
    margin: float = 0.05

    def __post_init__(self):
        if int(self.count) < 1:
            raise ValueError("sample count must be >= 1")
        if not 0.0 < float(self.margin) < 0.5:
            raise ValueError("margin must lie in (0, 0.5)")


@dataclass(frozen=True, eq=False)
class ChartManifold:
    """A manifold described by one coordinate patch.

    ``metric[i][j]`` and ``metric[j][i]`` are the same :class:`Expr` object.
    ``domain`` holds one open interval per coordinate; its bounds are what
    :meth:`sample_points` draws from.
    """

    coords: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric: tuple[tuple[Expr, ...], ...]
    name: str = ""

    def __post_init__(self):
        n = len(self.coords)
        if n < 1:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coords)) != n:
            raise ValueError(f"coordinate names must be unique: {self.coords}")
        if len(self.domain) != n:
            raise ValueError(f"domain has {len(self.domain)} intervals for {n} coordinates")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"empty coordinate interval ({lo}, {hi})")
        if len(self.metric) != n or any(len(row) != n for row in self.metric):
            raise ValueError(f"metric must be {n}x{n} for coordinates {self.coords}")
        rows = [list(r) for r in self.metric]
        for i in range(n):
            for j in range(n):
                e = rows[i][j]
                if e.vars != self.coords:
                    e = rows[i][j] = e.rebind(self.coords)
            for j in range(i):
                if rows[i][j] is not rows[j][i] and rows[i][j].root != rows[j][i].root:
                    raise ValueError(f"metric is not symmetric at ({j}, {i}): "
                                     f"{rows[j][i]} vs {rows[i][j]}")
                rows[i][j] = rows[j][i]
        object.__setattr__(self, "metric", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))

    @classmethod
    def from_strings(cls, coords: Sequence[str], domain, metric, consts=None, name: str = ""):
        coords = tuple(coords)
        rows = tuple(tuple(as_expr(v, coords, consts) for v in row) for row in metric)
        return cls(coords, tuple(tuple(b) for b in domain), rows, name)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __repr__(self) -> str:
        label = self.name or "chart"
        return f"<ChartManifold {label} coords={self.coords}>"

    # evaluation -------------------------------------------------------------
    def metric_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = self.dim
        g = np.empty((X.shape[0], n, n))
        for i in range(n):
            for j in range(i, n):
                g[:, i, j] = g[:, j, i] = self.metric[i][j].eval_batch(X)
        return g

    def metric_at(self, p) -> np.ndarray:
        return self.metric_batch(np.asarray(p, dtype=float).reshape(1, -1))[0]

    def inverse_metric_at(self, p) -> np.ndarray:
        g = self.metric_at(p)
        if degenerate_mask(g[None])[0]:
            raise DegenerateMetricError(f"metric degenerate at {tuple(np.ravel(p))}")
        return np.linalg.inv(g)

    # sampling --------------------------------------------------------------
    def sample_points(self, plan: SamplePlan, max_draws: int | None = None) -> np.ndarray:
        """Draw ``plan.count`` interior points, rejecting invalid metric points.

        Points where a metric entry fails to evaluate or the metric is
        near-degenerate are redrawn; the same seed yields the same points.
        """
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError(f"{self!r}: finite sampling bounds required")
        width = hi - lo
        a, b = lo + plan.margin * width, hi - plan.margin * width
        rng = np.random.default_rng(plan.seed)
        max_draws = max_draws or 100 * plan.count + 100
        accepted: list[np.ndarray] = []
        drawn = 0
        while sum(len(x) for x in accepted) < plan.count:
            if drawn >= max_draws:
                raise SamplingExhaustedError(
                    f"{self!r}: only {sum(len(x) for x in accepted)} of {plan.count} "
                    f"valid points after {drawn} draws")
            need = plan.count - sum(len(x) for x in accepted)
            batch = a + (b - a) * rng.random((need, self.dim))
            drawn += need
            ok = self.valid_mask(batch)
            accepted.append(batch[ok])
        return np.concatenate(accepted)[: plan.count]

    def valid_mask(self, X: np.ndarray) -> np.ndarray:
        n = self.dim
        g = np.empty((X.shape[0], n, n))
        bad = np.zeros(X.shape[0], dtype=bool)
        for i in range(n):
            for j in range(i, n):
                v, b = self.metric[i][j].eval_masked(X)
                g[:, i, j] = g[:, j, i] = np.where(b, 1.0, v)
                bad |= b
        return ~bad & ~degenerate_mask(g)


def _bind_components(chart: ChartManifold, components, consts=None) -> tuple[Expr, ...]:
    comps = tuple(as_expr(c, chart.coords, consts) for c in components)
    if len(comps) != chart.dim:
        raise ValueError(f"field has {len(comps)} components on a {chart.dim}-dim chart")
    return comps


@dataclass(frozen=True, eq=False)
class CoordVectorField:
    chart: ChartManifold
    components: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", _bind_components(self.chart, self.components))

    @classmethod
    def from_strings(cls, chart: ChartManifold, components, consts=None):
        return cls(chart, _bind_components(chart, components, consts))

    @classmethod
    def basis(cls, chart: ChartManifold, i: int) -> "CoordVectorField":
        return cls(chart, tuple(constant(1.0 if k == i else 0.0, chart.coords) for k in range(chart.dim)))

    @classmethod
    def zero(cls, chart: ChartManifold) -> "CoordVectorField":
        return cls(chart, tuple(constant(0.0, chart.coords) for _ in range(chart.dim)))

    def is_zero(self) -> bool:
        return all(isinstance(c.root, Num) and c.root.value == 0.0 for c in self.components)

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([c.eval_batch(X) for c in self.components], axis=1)

    def scaled(self, c: float) -> "CoordVectorField":
        return CoordVectorField(self.chart, tuple(comp * float(c) for comp in self.components))


@dataclass(frozen=True, eq=False)
class ScalarField:
    chart: ChartManifold
    expr: Expr

    def __post_init__(self):
        object.__setattr__(self, "expr", as_expr(self.expr, self.chart.coords))

    @classmethod
    def from_string(cls, chart: ChartManifold, text: ExprLike, consts=None):
        return cls(chart, as_expr(text, chart.coords, consts))


# --------------------------------------------------------------------------
# standard constructors
# --------------------------------------------------------------------------


def _diag(coords, entries, domain, name, consts=None) -> ChartManifold:
    n = len(coords)
    rows = [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
    return ChartManifold.from_strings(coords, domain, rows, consts, name)


def euclidean(n: int, coords: Sequence[str] | None = None,
              bounds: tuple[float, float] = (-1.0, 1.0), name: str = "") -> ChartManifold:
    """Flat R^n in Cartesian coordinates; default names x, y, z (x1.. beyond 3)."""
    if int(n) < 1:
        raise ValueError("euclidean dimension must be >= 1")
    n = int(n)
    if coords is None:
        coords = ("x", "y", "z")[:n] if n <= 3 else tuple(f"x{k + 1}" for k in range(n))
    return _diag(tuple(coords), [1] * n, [bounds] * n, name or f"euclidean({n})")


def sphere_chart(radius: float = 1.0, coords: Sequence[str] = ("theta", "phi"),
                 name: str = "") -> ChartManifold:
    """Round 2-sphere: ``r^2 dtheta^2 + r^2 sin(theta)^2 dphi^2`` on (0,pi) x (0,2pi)."""
    if not radius > 0:
        raise ValueError("sphere radius must be positive")
    th = coords[0]
    consts = {"r": float(radius)} if "r" not in coords else {}
    r = "r" if consts else repr(float(radius))
    return _diag(tuple(coords), [f"{r}^2", f"{r}^2*sin({th})^2"],
                 [(0.0, math.pi), (0.0, 2 * math.pi)], name or f"sphere({radius})", consts)


def hyperbolic_chart(curvature: float = -1.0, coords: Sequence[str] = ("x", "y"),
                     bounds_x: tuple[float, float] = (-1.0, 1.0),
                     bounds_y: tuple[float, float] = (0.2, 2.0), name: str = "") -> ChartManifold:
    """Upper half-plane model with constant curvature ``curvature < 0``.

    Metric ``(dx^2 + dy^2) / (k y^2)`` with ``k = -curvature``; Ric = curvature * g.
    """
    if not curvature < 0:
        raise ValueError("hyperbolic curvature must be negative")
    y = coords[1]
    k = -float(curvature)
    entry = f"1/({k!r}*{y}^2)"
    return _diag(tuple(coords), [entry, entry], [bounds_x, bounds_y],
                 name or f"hyperbolic({curvature})")


def interval(signature: int = 1, bounds: tuple[float, float] = (0.0, 1.0),
             coord: str = "t", name: str = "") -> ChartManifold:
    """One-dimensional interval with metric ``+dt^2`` or ``-dt^2``."""
    if signature not in (1, -1):
        raise ValueError("interval signature must be +1 or -1")
    return _diag((coord,), [signature], [bounds], name or f"interval({signature:+d})")
