"""Command line entry point: ``warpgeom check`` and ``warpgeom verify``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import __version__
from ._kernels import BACKEND
from .manifest import Check, Manifest, ManifestError, load_manifest
from .report import build_report, render_table, write_report
from .suites import CheckResult, resolve_suite, run_operation, verify_suite

REPORT_DIR_ENV = "WARPGEOM_REPORT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def bundled_manifests() -> list[Path]:
    root = resources.files("warpgeom") / "manifests"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith((".yaml", ".yml")))


def find_instance(name: str, manifest: str | None) -> Manifest:
    if manifest:
        m = load_manifest(manifest)
        if name not in m.instances:
            raise ManifestError("instances", f"no instance {name!r} in {manifest}; "
                                f"available: {sorted(m.instances)}")
        return m
    found = []
    for path in bundled_manifests():
        m = load_manifest(path)
        if name in m.instances:
            found.append(m)
    if not found:
        raise ManifestError("instances", f"no bundled manifest defines instance {name!r}; pass --manifest")
    if len(found) > 1:
        raise ManifestError("instances", f"instance {name!r} is ambiguous across "
                            f"{[m.path for m in found]}; pass --manifest")
    return found[0]


def _apply_overrides(check: Check, args) -> Check:
    plan = check.plan
    plan = replace(plan, **{k: v for k, v in (("count", args.samples), ("seed", args.seed),
                                              ("margin", args.margin)) if v is not None})
    tol = check.tolerances.override(curvature=args.tol_curvature, exact=args.tol_exact)
    return replace(check, plan=plan, tolerances=tol)


def run_check(m: Manifest, check: Check, diff: str) -> CheckResult:
    if check.suite:
        return verify_suite(check.suite, m.instances[check.instance], check.plan,
                            check.tolerances, diff, check.id)
    return run_operation(check.op, check.target, check.field, check.potential, check.lam,
                         check.plan, check.tolerances, diff, check.expect, check.id, check.target_name)


def run_checks(m: Manifest, checks: list[Check], diff: str, jobs: int = 1) -> list[CheckResult]:
    # results keep manifest order whatever the execution order
    if jobs > 1 and len(checks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda c: run_check(m, c, diff), checks))
    return [run_check(m, c, diff) for c in checks]


def _report_path(args, stem: str) -> Path:
    if args.report:
        return Path(args.report)
    return Path(os.environ.get(REPORT_DIR_ENV) or "reports") / f"{stem}.report.json"


def _finish(m: Manifest, checks: list[Check], results: list[CheckResult], args, stem: str) -> int:
    tol = checks[0].tolerances if checks else m.tolerances.override(
        curvature=args.tol_curvature, exact=args.tol_exact)
    seeds = {c.plan.seed for c in checks}
    report = build_report(results, manifest=Path(m.path).name, tolerances=tol, diff=args.diff,
                          seed=seeds.pop() if len(seeds) == 1 else None,
                          engine_version=__version__, backend=BACKEND)
    path = write_report(report, _report_path(args, stem))
    print(render_table(results))
    print(f"report: {path}")
    return report["summary"]["exit_status"]


def cmd_check(args) -> int:
    m = load_manifest(args.manifest)
    checks = [_apply_overrides(c, args) for c in m.checks]
    if not checks:
        print(f"{args.manifest}: manifest declares no checks", file=sys.stderr)
    results = run_checks(m, checks, args.diff, args.jobs)
    return _finish(m, checks, results, args, Path(args.manifest).stem)


def cmd_verify(args) -> int:
    try:
        sid = resolve_suite(args.suite)
    except KeyError as exc:
        raise ManifestError("--suite", exc.args[0]) from None
    m = find_instance(args.instance, args.manifest)
    check = _apply_overrides(Check(f"{sid}:{args.instance}", suite=sid, instance=args.instance,
                                   plan=m.plan, tolerances=m.tolerances), args)
    results = run_checks(m, [check], args.diff)
    return _finish(m, [check], results, args, f"{sid}-{args.instance}")


def cmd_list(args) -> int:
    for path in bundled_manifests():
        m = load_manifest(path)
        print(f"{path.name}: instances={sorted(m.instances)} checks={len(m.checks)}")
    return EXIT_OK


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=_positive_int, help="sample points per check")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--margin", type=float, help="fraction of each coordinate interval kept clear of the boundary")
    p.add_argument("--tol-curvature", type=float, help="pass band for curvature-level residuals")
    p.add_argument("--tol-exact", type=float, help="pass band for jet-exact residuals")
    p.add_argument("--diff", choices=("jets", "fd"), default="jets", help="derivative engine")
    p.add_argument("--report", help=f"report path (default: ${REPORT_DIR_ENV} or ./reports)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpgeom", description="Warped-product Ricci soliton verification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run every check in a manifest")
    c.add_argument("manifest")
    c.add_argument("--jobs", type=_positive_int, default=1, help="checks evaluated concurrently")
    _add_common(c)
    c.set_defaults(func=cmd_check)
    v = sub.add_parser("verify", help="run one suite on one instance")
    v.add_argument("--suite", required=True, help="S1..S9 or suite name")
    v.add_argument("--instance", required=True)
    v.add_argument("--manifest", help="manifest to read (default: search bundled manifests)")
    _add_common(v)
    v.set_defaults(func=cmd_verify)
    ls = sub.add_parser("list", help="list bundled manifests and instances")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:  # bad plan / tolerance overrides
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
