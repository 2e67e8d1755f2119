import json
import subprocess
import sys
import textwrap

import pytest

from warpgeom.cli import bundled_manifests, main
from warpgeom.manifest import ManifestError, load_manifest, parse_manifest

CONE_YAML = textwrap.dedent("""
    version: 1
    checks:
      - {suite: S5, instance: cone}
    instances:
      cone: {warped: cone, field: zeta}
    fields:
      zeta: {lifted: {warped: cone, base: ["t"], fiber: ["0", "0"]}}
    manifolds:
      cone: {warped: {base: I, fiber: S2, f: "t"}}
      I: {interval: {signature: 1, bounds: [0.2, 5]}}
      S2: {sphere: {radius: 1}}
""")


def _write(tmp_path, text, name="m.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _strip(report):
    report = dict(report)
    report.pop("generated_at")
    return report


def test_cone_manifest_resolves_out_of_order(tmp_path):
    m = load_manifest(_write(tmp_path, CONE_YAML))
    assert m.manifolds["cone"].product.dim == 3
    assert m.instances["cone"].zeta.warped is m.manifolds["cone"]


@pytest.mark.parametrize("data,path,fragment", [
    ({"manifolds": {"W": {"warped": {"base": "I", "fiber": "S", "f": "1"}}}}, "manifolds.W.warped.base", "'I'"),
    ({"manifolds": {"P": {"coords": ["x", "y", "z"], "domain": [[0, 1]] * 3,
                          "metric": [["1", "0"], ["0", "1"]]}}}, "manifolds.P.metric", "dimension mismatch"),
    ({"manifolds": {"E": {"euclidean": {"n": 2}}},
      "fields": {"v": {"vector": {"manifold": "E", "components": ["x"]}}}}, "fields.v.vector.components",
     "dimension mismatch"),
    ({"manifolds": {"E": {"euclidean": {"n": 2}}},
      "fields": {"v": {"vector": {"manifold": "E", "components": ["x+", "y"]}}}}, "fields.v.vector.components[0]",
     "byte 2"),
    ({"manifolds": {"A": {"warped": {"base": "B", "fiber": "B", "f": "1"}},
                    "B": {"warped": {"base": "A", "fiber": "A", "f": "1"}}}}, "manifolds.", "cyclic"),
    ({"checks": [{"suite": "S5", "instance": "missing"}]}, "checks[0].instance", "missing"),
    ({"checks": [{"suite": "S42", "instance": "x"}]}, "checks[0].suite", "unknown suite"),
    ({"bogus": 1}, "<root>", "unknown key"),
])
def test_manifest_errors_carry_paths(data, path, fragment):
    with pytest.raises(ManifestError) as err:
        parse_manifest(data)
    assert err.value.path.startswith(path)
    assert fragment in str(err.value)


def test_constants_may_reference_each_other():
    m = parse_manifest({"constants": {"b": "2*a", "a": 1.5},
                        "manifolds": {"I": {"interval": {"bounds": ["a", "b"]}}}})
    assert m.constants == {"a": 1.5, "b": 3.0}
    assert m.manifolds["I"].domain == ((1.5, 3.0),)


def test_bundled_manifests_load():
    paths = bundled_manifests()
    assert {p.stem for p in paths} >= {"cone", "coth", "grw", "products", "family"}
    names = []
    for p in paths:
        names += list(load_manifest(p).instances)
    assert len(names) == len(set(names))


def test_verify_cone_s5_exit_zero(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "S5", "--instance", "cone", "--report", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["checks"][0]["fitted"]["lambda"] == pytest.approx(1.0, abs=1e-10)
    assert "S5:cone" in capsys.readouterr().out


def test_check_coth_not_concurrent_expectation(tmp_path):
    path = next(p for p in bundled_manifests() if p.stem == "coth")
    out = tmp_path / "r.json"
    assert main(["check", str(path), "--report", str(out)]) == 0
    rep = json.loads(out.read_text())
    rec = next(c for c in rep["checks"] if c["id"] == "coth-not-concurrent")
    assert rec["verdict"] == "pass" and rec["conclusions"][0]["value"] >= 0.1


def test_failures_give_exit_one(tmp_path):
    extra = "  - {op: concurrent, manifold: cone, field: zeta, expect: {min: 1}}"
    text = CONE_YAML.replace("  - {suite: S5, instance: cone}", "  - {suite: S5, instance: cone}\n" + extra)
    assert extra in text
    assert main(["check", str(_write(tmp_path, text)), "--report", str(tmp_path / "r.json")]) == 1


def test_usage_and_manifest_errors_exit_two(tmp_path):
    assert main(["check", str(tmp_path / "absent.yaml")]) == 2
    assert main(["verify", "--suite", "S99", "--instance", "cone"]) == 2
    assert main(["bogus"]) == 2
    assert main(["check", str(_write(tmp_path, "manifolds: [1, 2")), "--report", str(tmp_path / "x.json")]) == 2


def test_discrepancy_does_not_fail_run(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "S8", "--instance", "grw_exp_lor", "--report", str(out)]) == 0
    rec = json.loads(out.read_text())["checks"][0]
    assert rec["paper_discrepancy"] is True and rec["verdict"] == "discrepancy"


def test_flag_overrides_and_env_report_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("WARPGEOM_REPORT_DIR", str(tmp_path / "rep"))
    code = main(["verify", "--suite", "S1", "--instance", "cone", "--samples", "7", "--seed", "3",
                 "--margin", "0.1", "--tol-exact", "1e-7", "--diff", "fd"])
    assert code == 0
    rep = json.loads((tmp_path / "rep" / "S1-cone.report.json").read_text())
    assert rep["checks"][0]["samples"] == 7 and rep["run"]["seed"] == 3
    assert rep["run"]["tolerances"]["exact"] == 1e-7 and rep["run"]["diff"] == "fd"


def test_reports_byte_stable_and_jobs_preserve_order(tmp_path):
    path = next(p for p in bundled_manifests() if p.stem == "cone")
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    main(["check", str(path), "--report", str(a)])
    main(["check", str(path), "--report", str(b)])
    main(["check", str(path), "--report", str(c), "--jobs", "4"])
    ra, rb, rc = (_strip(json.loads(p.read_text())) for p in (a, b, c))
    assert ra == rb == rc
    strip = lambda p: "\n".join(l for l in p.read_text().splitlines() if '"generated_at"' not in l)
    assert strip(a) == strip(b)


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "warpgeom", "verify", "--suite", "S2", "--instance", "coth",
                           "--report", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
