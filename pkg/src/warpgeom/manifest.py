"""YAML manifests: named manifolds, fields, instances and checks.

Schema (version 1)::

    version: 1
    constants: {a: 1.5}                       # name -> number or constant expression
    defaults:  {plan: {count: 64, seed: 0, margin: 0.05}, tolerances: {...}}
    manifolds:
      I:   {interval: {signature: 1, bounds: [0.2, 5], coord: t}}
      S2:  {sphere: {radius: 1, coords: [theta, phi]}}
      E2:  {euclidean: {n: 2, coords: [x, y], bounds: [-1, 1]}}
      H2:  {hyperbolic: {curvature: -1, coords: [x, y]}}
      P:   {coords: [x, y], domain: [[-1, 1], [0.5, 2]], metric: [["1", "0"], ["0", "x^2+1"]]}
      W:   {warped: {base: I, fiber: S2, f: "t"}}
    fields:
      zeta: {lifted: {warped: W, base: ["t"], fiber: ["0", "0"]}}
      rot:  {vector: {manifold: E2, components: ["-y", "x"]}}
      u:    {scalar: {manifold: W, expr: "t^2/2"}}
    instances:
      cone: {warped: W, field: zeta, potential: u, lambda: 1,
             base_point: [1.0], fiber_point: [1.0, 2.0]}
    checks:
      - {suite: S5, instance: cone}
      - {op: concurrent, manifold: W, field: zeta, expect: {max: 1e-8}}

Declaration order does not matter.  Every error message carries the dotted
path of the offending entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import yaml

from .expr import ExprError, ParseError, const_value
from .manifold import ChartManifold, CoordVectorField, SamplePlan, ScalarField, as_expr
from .manifold import euclidean, hyperbolic_chart, interval, sphere_chart
from .suites import OPERATIONS, Instance, resolve_suite
from .tolerances import DEFAULT, Tolerances
from .warped import LiftedField, WarpedProduct, build_warped

__all__ = ["Manifest", "Check", "ManifestError", "load_manifest", "parse_manifest"]

SCHEMA_VERSION = 1
_TOP_KEYS = {"version", "constants", "defaults", "manifolds", "fields", "instances", "checks", "description"}


class ManifestError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class Check:
    id: str
    suite: str | None = None
    instance: str | None = None
    op: str | None = None
    target: Any = None
    target_name: str = ""
    field: Any = None
    potential: ScalarField | None = None
    lam: float | None = None
    plan: SamplePlan = SamplePlan()
    tolerances: Tolerances = DEFAULT
    expect: dict = dc_field(default_factory=dict)


@dataclass
class Manifest:
    path: str
    constants: dict[str, float]
    manifolds: dict[str, Any]
    fields: dict[str, Any]
    instances: dict[str, Instance]
    checks: list[Check]
    plan: SamplePlan = SamplePlan()
    tolerances: Tolerances = DEFAULT


def load_manifest(path) -> Manifest:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError("", f"cannot read manifest {str(p)!r}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ManifestError("", f"invalid YAML{where}: {getattr(exc, 'problem', exc)}") from None
    return parse_manifest(data, str(p))


def parse_manifest(data: Any, source: str = "<memory>") -> Manifest:
    return _Resolver(data, source).run()


def _map(value, path) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ManifestError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _list(value, path, length: int | None = None) -> list:
    if not isinstance(value, list):
        raise ManifestError(path, f"expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ManifestError(path, f"expected {length} entries, got {len(value)}")
    return value


def _keys(d: dict, allowed: set, path: str, required: set = frozenset()):
    extra = set(d) - allowed
    if extra:
        raise ManifestError(path, f"unknown key(s) {sorted(map(str, extra))}; allowed: {sorted(allowed)}")
    missing = set(required) - set(d)
    if missing:
        raise ManifestError(path, f"missing required key(s) {sorted(missing)}")


def _kind(d: dict, kinds: tuple, path: str) -> str:
    found = [k for k in kinds if k in d]
    if len(found) != 1:
        raise ManifestError(path, f"expected exactly one of {list(kinds)}")
    return found[0]


class _Resolver:
    def __init__(self, data, source: str):
        self.source = source
        self.data = _map(data, "")
        _keys(self.data, _TOP_KEYS, "<root>")
        version = self.data.get("version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ManifestError("version", f"unsupported manifest version {version!r} (expected {SCHEMA_VERSION})")
        self.consts: dict[str, float] = {}
        self.manifolds: dict[str, Any] = {}
        self.fields: dict[str, Any] = {}
        self._resolving: list[str] = []

    # numbers and expressions ---------------------------------------------
    def number(self, value, path) -> float:
        if isinstance(value, bool):
            raise ManifestError(path, "expected a number, got a boolean")
        try:
            return const_value(value, self.consts)
        except ParseError as exc:
            raise ManifestError(path, f"cannot parse {value!r}: {exc}") from None
        except (ExprError, TypeError, ValueError) as exc:
            raise ManifestError(path, f"invalid number {value!r}: {exc}") from None

    def expr(self, value, coords, path):
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise ManifestError(path, f"expected an expression string or number, got {type(value).__name__}")
        try:
            return as_expr(value, coords, self.consts)
        except ParseError as exc:
            raise ManifestError(path, f"cannot parse {value!r}: {exc}") from None

    def names(self, value, path, length=None) -> tuple[str, ...]:
        items = _list(value, path, length)
        for i, c in enumerate(items):
            if not isinstance(c, str):
                raise ManifestError(f"{path}[{i}]", "coordinate names must be strings")
        return tuple(items)

    def bounds(self, value, path) -> tuple[float, float]:
        lo, hi = _list(value, path, 2)
        return self.number(lo, f"{path}[0]"), self.number(hi, f"{path}[1]")

    # constants -------------------------------------------------------------
    def resolve_constants(self):
        raw = _map(self.data.get("constants"), "constants")
        pending = dict(raw)
        # constants may reference each other; resolve until no progress
        while pending:
            progress = False
            for name, value in list(pending.items()):
                try:
                    self.consts[name] = const_value(value, self.consts)
                except ExprError:
                    continue
                del pending[name]
                progress = True
            if not progress:
                name = sorted(pending)[0]
                self.number(pending[name], f"constants.{name}")
                raise ManifestError(f"constants.{name}", "cyclic constant definition")

    # manifolds -------------------------------------------------------------
    def manifold(self, name, path):
        if not isinstance(name, str):
            raise ManifestError(path, "expected a manifold name")
        if name in self.manifolds:
            return self.manifolds[name]
        raw = _map(self.data.get("manifolds"), "manifolds")
        if name not in raw:
            raise ManifestError(path, f"unresolved manifold name {name!r}")
        if name in self._resolving:
            raise ManifestError(f"manifolds.{name}", f"cyclic reference {' -> '.join(self._resolving + [name])}")
        self._resolving.append(name)
        try:
            self.manifolds[name] = self._build_manifold(name, _map(raw[name], f"manifolds.{name}"))
        finally:
            self._resolving.pop()
        return self.manifolds[name]

    def chart(self, name, path) -> ChartManifold:
        m = self.manifold(name, path)
        return m.product if isinstance(m, WarpedProduct) else m

    def _build_manifold(self, name, d):
        path = f"manifolds.{name}"
        kinds = ("interval", "sphere", "euclidean", "hyperbolic", "warped", "metric")
        kind = _kind(d, kinds, path)
        if kind != "metric":
            _keys(d, {kind}, path)
            spec = _map(d[kind], f"{path}.{kind}")
            p = f"{path}.{kind}"
        try:
            if kind == "interval":
                _keys(spec, {"signature", "bounds", "coord"}, p, {"bounds"})
                sig = spec.get("signature", 1)
                if sig not in (1, -1):
                    raise ManifestError(f"{p}.signature", "must be 1 or -1")
                coord = spec.get("coord", "t")
                return interval(sig, self.bounds(spec["bounds"], f"{p}.bounds"), coord, name)
            if kind == "sphere":
                _keys(spec, {"radius", "coords"}, p)
                coords = self.names(spec.get("coords", ["theta", "phi"]), f"{p}.coords", 2)
                return sphere_chart(self.number(spec.get("radius", 1), f"{p}.radius"), coords, name)
            if kind == "euclidean":
                _keys(spec, {"n", "coords", "bounds"}, p, {"n"})
                n = spec["n"]
                if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                    raise ManifestError(f"{p}.n", "must be a positive integer")
                coords = self.names(spec["coords"], f"{p}.coords", n) if "coords" in spec else None
                b = self.bounds(spec["bounds"], f"{p}.bounds") if "bounds" in spec else (-1.0, 1.0)
                return euclidean(n, coords, b, name)
            if kind == "hyperbolic":
                _keys(spec, {"curvature", "coords", "bounds_x", "bounds_y"}, p)
                kw = {}
                if "bounds_x" in spec:
                    kw["bounds_x"] = self.bounds(spec["bounds_x"], f"{p}.bounds_x")
                if "bounds_y" in spec:
                    kw["bounds_y"] = self.bounds(spec["bounds_y"], f"{p}.bounds_y")
                coords = self.names(spec.get("coords", ["x", "y"]), f"{p}.coords", 2)
                return hyperbolic_chart(self.number(spec.get("curvature", -1), f"{p}.curvature"),
                                        coords, name=name, **kw)
            if kind == "warped":
                _keys(spec, {"base", "fiber", "f"}, p, {"base", "fiber", "f"})
                base = self.manifold(spec["base"], f"{p}.base")
                fiber = self.manifold(spec["fiber"], f"{p}.fiber")
                for part, m in (("base", base), ("fiber", fiber)):
                    if isinstance(m, WarpedProduct):
                        raise ManifestError(f"{p}.{part}", "nested warped products are not supported")
                f = self.expr(spec["f"], base.coords, f"{p}.f")
                return build_warped(base, fiber, f, name=name)
            # inline chart
            _keys(d, {"coords", "domain", "metric"}, path, {"coords", "domain", "metric"})
            coords = self.names(d["coords"], f"{path}.coords")
            n = len(coords)
            domain = _list(d["domain"], f"{path}.domain")
            if len(domain) != n:
                raise ManifestError(f"{path}.domain",
                                    f"dimension mismatch: {len(domain)} intervals for {n} coordinates")
            dom = tuple(self.bounds(b, f"{path}.domain[{i}]") for i, b in enumerate(domain))
            rows = _list(d["metric"], f"{path}.metric")
            if len(rows) != n:
                raise ManifestError(f"{path}.metric",
                                    f"dimension mismatch: {len(rows)}x? metric for {n} coordinates {list(coords)}")
            metric = []
            for i, row in enumerate(rows):
                row = _list(row, f"{path}.metric[{i}]")
                if len(row) != n:
                    raise ManifestError(f"{path}.metric[{i}]",
                                        f"dimension mismatch: row has {len(row)} entries for {n} coordinates")
                metric.append(tuple(self.expr(v, coords, f"{path}.metric[{i}][{j}]") for j, v in enumerate(row)))
            return ChartManifold(coords, dom, tuple(metric), name)
        except ManifestError:
            raise
        except (ValueError, TypeError) as exc:
            raise ManifestError(path, str(exc)) from None

    # fields ----------------------------------------------------------------
    def field(self, name, path):
        if not isinstance(name, str):
            raise ManifestError(path, "expected a field name")
        if name in self.fields:
            return self.fields[name]
        raw = _map(self.data.get("fields"), "fields")
        if name not in raw:
            raise ManifestError(path, f"unresolved field name {name!r}")
        fpath = f"fields.{name}"
        d = _map(raw[name], fpath)
        kind = _kind(d, ("vector", "lifted", "scalar"), fpath)
        _keys(d, {kind}, fpath)
        spec = _map(d[kind], f"{fpath}.{kind}")
        p = f"{fpath}.{kind}"
        if kind == "vector":
            _keys(spec, {"manifold", "components"}, p, {"manifold", "components"})
            chart = self.chart(spec["manifold"], f"{p}.manifold")
            comps = _list(spec["components"], f"{p}.components")
            if len(comps) != chart.dim:
                raise ManifestError(f"{p}.components",
                                    f"dimension mismatch: {len(comps)} components on a {chart.dim}-dim manifold")
            value = CoordVectorField(chart, tuple(self.expr(c, chart.coords, f"{p}.components[{i}]")
                                                  for i, c in enumerate(comps)))
        elif kind == "lifted":
            _keys(spec, {"warped", "base", "fiber"}, p, {"warped", "base", "fiber"})
            W = self.manifold(spec["warped"], f"{p}.warped")
            if not isinstance(W, WarpedProduct):
                raise ManifestError(f"{p}.warped", f"{spec['warped']!r} is not a warped product")
            parts = []
            for part, chart in (("base", W.base), ("fiber", W.fiber)):
                comps = _list(spec[part], f"{p}.{part}")
                if len(comps) != chart.dim:
                    raise ManifestError(f"{p}.{part}",
                                        f"dimension mismatch: {len(comps)} components for a {chart.dim}-dim {part}")
                parts.append(CoordVectorField(chart, tuple(self.expr(c, chart.coords, f"{p}.{part}[{i}]")
                                                           for i, c in enumerate(comps))))
            value = LiftedField(W, parts[0], parts[1])
        else:
            _keys(spec, {"manifold", "expr"}, p, {"manifold", "expr"})
            chart = self.chart(spec["manifold"], f"{p}.manifold")
            value = ScalarField(chart, self.expr(spec["expr"], chart.coords, f"{p}.expr"))
        self.fields[name] = value
        return value

    # plan / tolerances ----------------------------------------------------
    def plan(self, d, path, base: SamplePlan) -> SamplePlan:
        d = _map(d, path)
        _keys(d, {"count", "seed", "margin"}, path)
        for k in ("count", "seed"):
            if k in d and (not isinstance(d[k], int) or isinstance(d[k], bool)):
                raise ManifestError(f"{path}.{k}", "must be an integer")
        try:
            return SamplePlan(d.get("count", base.count), d.get("seed", base.seed),
                              self.number(d["margin"], f"{path}.margin") if "margin" in d else base.margin)
        except ValueError as exc:
            raise ManifestError(path, str(exc)) from None

    def tolerances(self, d, path, base: Tolerances) -> Tolerances:
        d = _map(d, path)
        _keys(d, set(DEFAULT.as_dict()), path)
        return base.override(**{k: self.number(v, f"{path}.{k}") for k, v in d.items()})

    # instances and checks --------------------------------------------------
    def instance(self, name, d, path) -> Instance:
        d = _map(d, path)
        _keys(d, {"warped", "field", "potential", "lambda", "base_point", "fiber_point"}, path, {"warped"})
        W = self.manifold(d["warped"], f"{path}.warped")
        if not isinstance(W, WarpedProduct):
            raise ManifestError(f"{path}.warped", f"{d['warped']!r} is not a warped product")
        zeta = u = None
        if "field" in d:
            zeta = self.field(d["field"], f"{path}.field")
            if not isinstance(zeta, LiftedField) or zeta.warped is not W:
                raise ManifestError(f"{path}.field", f"{d['field']!r} is not a lifted field on {d['warped']!r}")
        if "potential" in d:
            u = self.field(d["potential"], f"{path}.potential")
            if not isinstance(u, ScalarField) or u.chart is not W.product:
                raise ManifestError(f"{path}.potential", f"{d['potential']!r} is not a scalar on {d['warped']!r}")
        pts = {}
        for key, chart in (("base_point", W.base), ("fiber_point", W.fiber)):
            if key in d:
                vals = _list(d[key], f"{path}.{key}", chart.dim)
                pts[key] = tuple(self.number(v, f"{path}.{key}[{i}]") for i, v in enumerate(vals))
        lam = self.number(d["lambda"], f"{path}.lambda") if "lambda" in d else None
        return Instance(name, W, zeta, u, lam, pts.get("base_point"), pts.get("fiber_point"))

    def check(self, i, d, instances, plan, tol) -> Check:
        path = f"checks[{i}]"
        d = _map(d, path)
        common = {"id", "plan", "tolerances"}
        p = self.plan(d.get("plan"), f"{path}.plan", plan)
        t = self.tolerances(d.get("tolerances"), f"{path}.tolerances", tol)
        if "suite" in d:
            _keys(d, common | {"suite", "instance"}, path, {"suite", "instance"})
            try:
                sid = resolve_suite(d["suite"])
            except KeyError as exc:
                raise ManifestError(f"{path}.suite", exc.args[0]) from None
            name = d["instance"]
            if name not in instances:
                raise ManifestError(f"{path}.instance", f"unresolved instance name {name!r}")
            return Check(str(d.get("id", f"{sid}:{name}")), suite=sid, instance=name, plan=p, tolerances=t)
        if "op" in d:
            _keys(d, common | {"op", "manifold", "field", "potential", "lambda", "expect"}, path, {"op", "manifold"})
            op = d["op"]
            if op not in OPERATIONS:
                raise ManifestError(f"{path}.op", f"unknown operation {op!r}; expected one of {sorted(OPERATIONS)}")
            target = self.manifold(d["manifold"], f"{path}.manifold")
            zeta = self.field(d["field"], f"{path}.field") if "field" in d else None
            u = self.field(d["potential"], f"{path}.potential") if "potential" in d else None
            if zeta is not None and not isinstance(zeta, (CoordVectorField, LiftedField)):
                raise ManifestError(f"{path}.field", "expected a vector field")
            if u is not None and not isinstance(u, ScalarField):
                raise ManifestError(f"{path}.potential", "expected a scalar field")
            chart = target.product if isinstance(target, WarpedProduct) else target
            for key, obj in (("field", zeta), ("potential", u)):
                owner = None
                if isinstance(obj, LiftedField):
                    owner = obj.warped.product
                elif obj is not None:
                    owner = obj.chart
                if owner is not None and owner is not chart:
                    raise ManifestError(f"{path}.{key}", f"{d[key]!r} does not live on {d['manifold']!r}")
            expect = _map(d.get("expect"), f"{path}.expect")
            _keys(expect, {"max", "min", "lambda", "mu", "lambda_tol", "mu_tol", "verdict"}, f"{path}.expect")
            exp = {k: (v if k == "verdict" else self.number(v, f"{path}.expect.{k}")) for k, v in expect.items()}
            lam = self.number(d["lambda"], f"{path}.lambda") if "lambda" in d else None
            return Check(str(d.get("id", f"{op}:{d['manifold']}")), op=op, target=target,
                         target_name=d["manifold"], field=zeta, potential=u, lam=lam,
                         plan=p, tolerances=t, expect=exp)
        raise ManifestError(path, "a check needs either 'suite' or 'op'")

    def run(self) -> Manifest:
        self.resolve_constants()
        defaults = _map(self.data.get("defaults"), "defaults")
        _keys(defaults, {"plan", "tolerances"}, "defaults")
        plan = self.plan(defaults.get("plan"), "defaults.plan", SamplePlan())
        tol = self.tolerances(defaults.get("tolerances"), "defaults.tolerances", DEFAULT)
        for name in _map(self.data.get("manifolds"), "manifolds"):
            self.manifold(name, f"manifolds.{name}")
        for name in _map(self.data.get("fields"), "fields"):
            self.field(name, f"fields.{name}")
        instances = {name: self.instance(name, d, f"instances.{name}")
                     for name, d in _map(self.data.get("instances"), "instances").items()}
        raw_checks = self.data.get("checks") or []
        checks = [self.check(i, d, instances, plan, tol)
                  for i, d in enumerate(_list(raw_checks, "checks"))]
        seen = set()
        for i, c in enumerate(checks):
            if c.id in seen:
                raise ManifestError(f"checks[{i}].id", f"duplicate check id {c.id!r}")
            seen.add(c.id)
        return Manifest(self.source, dict(self.consts), dict(self.manifolds), dict(self.fields),
                        instances, checks, plan, tol)
