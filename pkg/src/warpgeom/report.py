"""Run reports: a versioned JSON document and an aligned text table."""

from __future__ import annotations

import datetime as _dt
import json
from pathlib import Path
from typing import Sequence

from .suites import FAILING_VERDICTS, CheckResult
from .tolerances import Tolerances

__all__ = ["REPORT_SCHEMA_VERSION", "build_report", "dumps_report", "write_report", "render_table", "exit_status"]

REPORT_SCHEMA_VERSION = 1


def build_report(results: Sequence[CheckResult], *, manifest: str, tolerances: Tolerances, diff: str,
                 seed: int | None, engine_version: str, backend: str, timestamp: str | None = None) -> dict:
    counts: dict[str, int] = {}
    for r in results:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "generated_at": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "run": {
            "engine_version": engine_version,
            "kernel_backend": backend,
            "manifest": manifest,
            "seed": seed,
            "diff": diff,
            "tolerances": tolerances.as_dict(),
        },
        "summary": {"checks": len(results), "verdicts": dict(sorted(counts.items())),
                    "exit_status": exit_status(results)},
        "checks": [r.to_dict() for r in results],
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: dict, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps_report(report), encoding="utf-8")
    return p


def exit_status(results: Sequence[CheckResult]) -> int:
    return 1 if any(r.verdict in FAILING_VERDICTS for r in results) else 0


def _g(v) -> str:
    return "-" if v is None else f"{v:.3g}"


def render_table(results: Sequence[CheckResult]) -> str:
    header = ("check", "verdict", "residual max", "residual mean", "fitted", "n")
    rows = []
    for r in results:
        fitted = ", ".join(f"{k}={v:.6g}" for k, v in r.fitted.items() if isinstance(v, float))
        verdict = r.verdict + (" *" if r.paper_discrepancy else "")
        rows.append((r.id, verdict, _g(r.residual_max), _g(r.residual_mean), fitted or "-", str(r.samples)))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(["-" * w for w in widths])]
    out += [line(row) for row in rows]
    for r in results:
        if r.error:
            out.append(f"  {r.id}: {r.error}")
    if any(r.paper_discrepancy for r in results):
        out.append("* hypotheses hold but a conclusion residual exceeds tolerance (paper_discrepancy)")
    return "\n".join(out)
