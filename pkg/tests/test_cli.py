import json
import math

import numpy as np
import pytest

from dgtime.cli import main, parse_problem
from dgtime.errors import InvalidArgumentError
from dgtime.parabolic import StateSource


def run(tmp_path, monkeypatch, argv):
    monkeypatch.setenv("DGTIME_OUT", str(tmp_path))
    return main(argv)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_parse_problem_presets():
    heat = parse_problem("heat")
    assert heat.triplet.dim == 64 and heat.source is None
    assert heat.u0[0] == 1.0 and np.abs(heat.u0[1:]).max() == 0.0
    logistic = parse_problem("logistic")
    assert logistic.operator_scale == 0.0
    assert isinstance(logistic.source, StateSource)
    cubic = parse_problem("cubic")
    assert isinstance(cubic.source, StateSource) and cubic.triplet.dim == 16


def test_parse_problem_custom_and_errors():
    prob = parse_problem("operator=laplace1d,source=zero,u0=vals:1:2:3,m=3,scale=0.5")
    np.testing.assert_allclose(prob.u0, [1, 2, 3])
    assert prob.operator_scale == 0.5
    for bad in (
        "operator=banana",
        "m=2,u0=mode:5",
        "u0=huh:1",
        "source=banana",
        "unknown_key=1",
        "novalue",
    ):
        with pytest.raises(InvalidArgumentError):
            parse_problem(bad)


def test_bad_ell_exit_code(tmp_path, monkeypatch, capsys):
    assert run(tmp_path, monkeypatch, ["solve", "--ell", "9"]) == 2
    assert "--ell" in capsys.readouterr().err


def test_bad_family_exit_code(tmp_path, monkeypatch, capsys):
    code = run(tmp_path, monkeypatch, ["solve", "--family", "banana:T=1,N=4"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_verify_reconstruction(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "verify-reconstruction",
            "--ell",
            "2",
            "--family",
            "random:T=1,N=6,seed=4,cap=3",
            "--levels",
            "2",
            "--trials",
            "5",
            "--out",
            "recon",
        ],
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "continuity" in out
    csv = (tmp_path / "recon_reconstruction.csv").read_text().splitlines()
    assert csv[0].startswith("ell,p,family,level")
    assert len(csv) > 1


def test_verify_identities(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "verify-identities",
            "--ell",
            "1",
            "--family",
            "geometric:T=1,N=8,sigma=0.5",
            "--levels",
            "2",
            "--trials",
            "5",
            "--problem",
            "operator=laplace1d,source=zero,u0=mode:1,m=8",
            "--out",
            "ident",
        ],
    )
    assert code == 0
    assert (tmp_path / "ident_identities.csv").exists()


def test_solve_outputs(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "solve",
            "--ell",
            "1",
            "--family",
            "uniform:T=1,N=8",
            "--problem",
            "operator=laplace1d,source=zero,u0=mode:1,m=8",
            "--out",
            "sol",
        ],
    )
    assert code == 0
    nodal = (tmp_path / "sol_nodal.csv").read_text().splitlines()
    assert nodal[0] == "t,u_component_1_left_limit,u_B_norm_left_limit"
    assert len(nodal) == 9
    led = json.loads((tmp_path / "sol_ledger.json").read_text())
    assert "h1_energy" in led and "h2_dt_recon_dual" in led
    # final nodal value approximates the exact decay e^(-pi^2)
    last = float(nodal[-1].split(",")[1])
    assert abs(last - math.exp(-math.pi**2)) <= 1e-3
    sol = json.loads((tmp_path / "sol_solution.json").read_text())
    assert sol["degree"] == 1


def test_solve_semilinear_preset(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        ["solve", "--ell", "2", "--family", "uniform:T=1,N=8", "--problem", "logistic", "--out", "log"],
    )
    assert code == 0
    nodal = (tmp_path / "log_nodal.csv").read_text().splitlines()
    last = float(nodal[-1].split(",")[1])
    exact = 0.2 * math.exp(1.0) / (0.8 + 0.2 * math.exp(1.0))
    assert abs(last - exact) <= 1e-8


def test_convergence_command(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "convergence",
            "--ell",
            "1",
            "--family",
            "uniform:T=1,N=4",
            "--levels",
            "3",
            "--problem",
            "operator=laplace1d,source=zero,u0=mode:1,m=4",
            "--no-plots",
            "--out",
            "conv",
        ],
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "observed convergence rate" in out
    summary = json.loads((tmp_path / "conv_summary.json").read_text())
    assert summary["all_passed"] is True
    assert summary["error_rate"] > 1.0


def test_convergence_rejects_semilinear(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        ["convergence", "--problem", "logistic", "--levels", "3", "--out", "c2"],
    )
    assert code == 2


def test_compactness_command_with_figures(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "compactness",
            "--ell",
            "1",
            "--family",
            "geometric:T=1,N=8,sigma=0.5",
            "--levels",
            "3",
            "--problem",
            "operator=laplace1d,source=cubic,u0=mode:1,m=8",
            "--trials",
            "3",
            "--out",
            "comp",
        ],
    )
    assert code == 0
    # report path renders figures next to the delimited output
    for name in (
        "comp_levels.csv",
        "comp_cauchy.csv",
        "comp_shift.csv",
        "comp_summary.json",
        "comp_cauchy.png",
        "comp_hypotheses.png",
        "comp_shift.png",
    ):
        assert (tmp_path / name).exists(), name
    summary = json.loads((tmp_path / "comp_summary.json").read_text())
    assert summary["all_passed"] is True


def test_constants_command(tmp_path, monkeypatch, capsys):
    code = run(
        tmp_path,
        monkeypatch,
        [
            "constants",
            "--ell",
            "1",
            "--family",
            "uniform:T=1,N=4",
            "--levels",
            "2",
            "--trials",
            "3",
            "--out",
            "const",
        ],
    )
    assert code == 0
    lines = (tmp_path / "const_constants.csv").read_text().splitlines()
    assert lines[0] == "ell,p,family,cr_estimate,trace_constant"
    # ell in {0, 1} x p in {1, 2, inf}
    assert len(lines) == 7
