import json

import numpy as np

from dgtime import ParabolicProblem, PartitionFamily, laplace_triplet, run_refinement_study
from dgtime.reports import emit_refinement_report, fmt, write_csv, write_json


def test_fmt_roundtrip():
    xs = [0.1, 1 / 3, 1e-300, 123456.789, float("inf")]
    for x in xs[:-1]:
        assert float(fmt(x)) == x
    assert fmt(float("inf")) == "inf"
    assert fmt(3) == "3"
    assert fmt("abc") == "abc"


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], [2, 1 / 3]])
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "1,0.5"
    assert float(lines[2].split(",")[1]) == 1 / 3


def test_write_json_sorted_and_typed(tmp_path):
    path = write_json(tmp_path / "t.json", {"b": np.float64(1.5), "a": np.arange(3)})
    data = json.loads(path.read_text())
    assert data == {"a": [0, 1, 2], "b": 1.5}
    # keys are emitted in sorted order for byte stability
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')


_CACHE = {}


def _small_report():
    # the study is deterministic, so one instance serves every test; a second
    # independently built instance is kept for the byte-identity check
    if "report" in _CACHE:
        return _CACHE["report"]
    _CACHE["report"] = _build_report()
    return _CACHE["report"]


def _build_report():
    m = 4
    u0 = np.zeros(m)
    u0[0] = 1.0
    prob = ParabolicProblem(triplet=laplace_triplet(m), u0=u0)
    fam = PartitionFamily(kind="uniform", T=1.0, levels=(2, 4, 8))
    mu = prob.triplet.mu

    def exact(t):
        return u0 * np.exp(-mu * t)

    return run_refinement_study(prob, fam, degree=1, exact=exact, cr_trials=2, seed=0)


def test_emit_refinement_report_files(tmp_path):
    report = _small_report()
    written = emit_refinement_report(report, tmp_path / "run", plots=True)
    names = {p.name for p in written}
    assert {
        "run_levels.csv",
        "run_cauchy.csv",
        "run_errors.csv",
        "run_shift.csv",
        "run_summary.json",
        "run_cauchy.png",
        "run_hypotheses.png",
        "run_shift.png",
        "run_errors.png",
    } == names
    for p in written:
        assert p.exists() and p.stat().st_size > 0
    summary = json.loads((tmp_path / "run_summary.json").read_text())
    assert summary["family"]["kind"] == "uniform"
    assert isinstance(summary["all_passed"], bool)
    header = (tmp_path / "run_levels.csv").read_text().splitlines()[0].split(",")
    for col in ("tau_max", "h1_energy", "h2_dt_recon_dual", "h3_jump_sum_B_sq"):
        assert col in header


def test_emit_refinement_report_no_plots(tmp_path):
    report = _small_report()
    written = emit_refinement_report(report, tmp_path / "run", plots=False)
    assert all(p.suffix != ".png" for p in written)


def test_emit_byte_identical(tmp_path):
    # identical reports serialize to byte-identical tables and figures
    ra, rb = _small_report(), _build_report()
    wa = emit_refinement_report(ra, tmp_path / "a" / "run", plots=True)
    wb = emit_refinement_report(rb, tmp_path / "b" / "run", plots=True)
    for pa, pb in zip(sorted(wa), sorted(wb)):
        assert pa.read_bytes() == pb.read_bytes(), pa.name
