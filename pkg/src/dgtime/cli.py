"""Command-line front end.

Subcommands: verify-reconstruction, verify-identities, solve, convergence,
compactness, constants.  Exit codes: 0 success, 1 assertion failure (the
failing invariant is named), 2 usage or configuration error.  All
randomness is seeded from the config, so identical invocations produce
byte-identical output files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgumentError
from .legendre import PiecewisePoly, random_poly
from .parabolic import (
    ParabolicProblem,
    StateSource,
    TimeSource,
    solve_linear,
    solve_semilinear,
    stability_ledger,
)
from .reconstruction import (
    defect_norm,
    estimate_CR,
    jump_functional,
    reconstruct,
    trace_constant,
    verify_derivative_identity,
)
from .spaces import laplace_triplet, spectral_triplet
from .time_mesh import parse_family
from . import harness, reports

P_VALUES = (1.0, 2.0, math.inf)


def _parse_exponent(text: str) -> float:
    if text in ("inf", "infinity", "oo"):
        return math.inf
    value = float(text)
    if value < 1.0:
        raise InvalidArgumentError(f"exponent must be >= 1, got {value}")
    return value


def parse_problem(text: str):
    """Problem spec: a preset name or "key=value,..." string.

    Presets: "heat" (linear spectral heat, u0 = first mode),
    "logistic" (scalar ODE u' = u(1-u)), "cubic" (semilinear heat with
    f(u) = u - u^3).  Keys: operator (laplace1d|zero), source
    (zero|logistic|cubic), u0 ("mode:k" or a comma-free colon list like
    "vals:0.5:0.25"), m, scale, p.
    """
    presets = {
        "heat": "operator=laplace1d,source=zero,u0=mode:1,m=64",
        "logistic": "operator=zero,source=logistic,u0=vals:0.2,m=1",
        "cubic": "operator=laplace1d,source=cubic,u0=mode:1,m=16",
    }
    text = presets.get(text, text)
    kv = {}
    for item in text.split(","):
        if not item:
            continue
        if "=" not in item:
            raise InvalidArgumentError(f"problem spec item {item!r} is not key=value")
        k, v = item.split("=", 1)
        kv[k.strip()] = v.strip()
    m = int(kv.pop("m", 64))
    operator = kv.pop("operator", "laplace1d")
    if operator == "laplace1d":
        triplet, scale = laplace_triplet(m), float(kv.pop("scale", 1.0))
    elif operator == "zero":
        triplet, scale = spectral_triplet(np.ones(m)), 0.0
        kv.pop("scale", None)
    else:
        raise InvalidArgumentError(f"unknown operator {operator!r}")
    u0_spec = kv.pop("u0", "mode:1")
    if u0_spec.startswith("mode:"):
        k = int(u0_spec.split(":", 1)[1])
        if not 1 <= k <= m:
            raise InvalidArgumentError(f"mode index {k} outside 1..{m}")
        u0 = np.zeros(m)
        u0[k - 1] = 1.0
    elif u0_spec.startswith("vals:"):
        u0 = np.asarray([float(x) for x in u0_spec.split(":")[1:]], dtype=float)
        if u0.size != m:
            raise InvalidArgumentError(f"u0 has {u0.size} entries, expected {m}")
    else:
        raise InvalidArgumentError(f"cannot parse u0 spec {u0_spec!r}")
    source_name = kv.pop("source", "zero")
    if source_name == "zero":
        source = None
    elif source_name == "logistic":
        source = StateSource(
            f=lambda u: u * (1.0 - u), fprime=lambda u: 1.0 - 2.0 * u, lipschitz=3.0
        )
    elif source_name == "cubic":
        source = StateSource(
            f=lambda u: u - u**3, fprime=lambda u: 1.0 - 3.0 * u**2, lipschitz=4.0
        )
    else:
        raise InvalidArgumentError(f"unknown source {source_name!r}")
    p = float(kv.pop("p", 2.0))
    if kv:
        raise InvalidArgumentError(f"unknown problem keys: {sorted(kv)}")
    return ParabolicProblem(
        triplet=triplet, u0=u0, source=source, operator_scale=scale, p=p
    )


def _out_stem(args) -> Path:
    base = Path(os.environ.get("DGTIME_OUT", "."))
    stem = Path(args.out)
    if not stem.is_absolute():
        stem = base / stem
    stem.parent.mkdir(parents=True, exist_ok=True)
    return stem


def _fail(invariant: str, detail: str) -> int:
    print(f"FAILED invariant: {invariant}\n  {detail}", file=sys.stderr)
    return 1


def cmd_verify_reconstruction(args) -> int:
    family = parse_family(args.family, levels=args.levels, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    S = spectral_triplet(np.ones(3))
    rows = []
    worst_cont = 0.0
    worst_interp = 0.0
    for level, P in enumerate(family.partitions()):
        for p in P_VALUES:
            best = 0.0
            dsum = jsum = 0.0
            for _ in range(args.trials):
                u = random_poly(rng, P, args.ell, S.dim)
                u0 = rng.uniform(-1, 1, size=S.dim)
                Ru = reconstruct(u, u0)
                scale = 1.0 + float(np.abs(u.coeffs).max())
                for n in range(1, P.num_intervals):
                    gap = np.abs(Ru.left_value(n) - Ru.right_value(n)).max()
                    worst_cont = max(worst_cont, gap / scale)
                interp = np.abs(Ru.node_left_values() - u.node_left_values()).max()
                worst_interp = max(worst_interp, interp / scale)
                d = defect_norm(u, u0, p, S)
                j = jump_functional(u, u0, p, S)
                if j > 1e-300:
                    best = max(best, d / j)
                    dsum += d
                    jsum += j
            rows.append([args.ell, p, family.kind, level, dsum, jsum, best])
    stem = _out_stem(args)
    reports.write_csv(
        stem.with_name(stem.name + "_reconstruction.csv"),
        ["ell", "p", "family", "level", "defect_sum", "jump_functional_sum", "cr_ratio_sup"],
        rows,
    )
    print(f"node continuity mismatch (relative): {worst_cont:.3e}")
    print(f"left-limit interpolation mismatch (relative): {worst_interp:.3e}")
    if worst_cont > args.tol:
        return _fail("reconstruction_node_continuity", f"{worst_cont:.3e} > {args.tol}")
    if worst_interp > args.tol:
        return _fail("reconstruction_left_interpolation", f"{worst_interp:.3e} > {args.tol}")
    return 0


def cmd_verify_identities(args) -> int:
    family = parse_family(args.family, levels=args.levels, seed=args.seed)
    prob = parse_problem(args.problem)
    rng = np.random.default_rng(args.seed)
    S = prob.triplet
    rows = []
    worst_id = worst_energy = 0.0
    for level, P in enumerate(family.partitions()):
        for _ in range(args.trials):
            u = random_poly(rng, P, args.ell, S.dim)
            v = random_poly(rng, P, args.ell, S.dim)
            u0 = rng.uniform(-1, 1, size=S.dim)
            res = verify_derivative_identity(u, u0, v, S)
            worst_id = max(worst_id, res)
        sol = solve_linear(
            ParabolicProblem(
                triplet=S, u0=prob.u0, source=None, operator_scale=prob.operator_scale
            ),
            P,
            args.ell,
        )
        led = stability_ledger(prob if prob.source is None else ParabolicProblem(
            triplet=S, u0=prob.u0, source=None, operator_scale=prob.operator_scale
        ), sol)
        worst_energy = max(worst_energy, led.energy_identity_residual or 0.0)
        rows.append([args.ell, family.kind, level, worst_id, led.energy_identity_residual])
    stem = _out_stem(args)
    reports.write_csv(
        stem.with_name(stem.name + "_identities.csv"),
        ["ell", "family", "level", "derivative_identity_residual_sup", "energy_identity_residual"],
        rows,
    )
    print(f"derivative identity residual (sup): {worst_id:.3e}")
    print(f"energy identity residual (sup): {worst_energy:.3e}")
    if worst_id > 1e-11:
        return _fail("derivative_identity", f"{worst_id:.3e} > 1e-11")
    if worst_energy > 1e-10:
        return _fail("energy_identity", f"{worst_energy:.3e} > 1e-10")
    return 0


def cmd_solve(args) -> int:
    family = parse_family(args.family, levels=1, seed=args.seed)
    prob = parse_problem(args.problem)
    P = family.build(0)
    if isinstance(prob.source, StateSource):
        u = solve_semilinear(prob, P, args.ell, tol=args.tol)
    else:
        u = solve_linear(prob, P, args.ell)
    led = stability_ledger(prob, u)
    stem = _out_stem(args)
    rows = []
    lefts = u.node_left_values()
    for n in range(P.num_intervals):
        val = lefts[n]
        rows.append(
            [
                float(P.nodes[n + 1]),
                float(val[0]),
                float(np.sqrt(prob.triplet.norm_sq("B", val))),
            ]
        )
    reports.write_csv(
        stem.with_name(stem.name + "_nodal.csv"),
        ["t", "u_component_1_left_limit", "u_B_norm_left_limit"],
        rows,
    )
    reports.write_json(
        stem.with_name(stem.name + "_ledger.json"),
        {"u0": list(prob.u0), **{k: v for k, v in led.as_dict().items()}},
    )
    stem.with_name(stem.name + "_solution.json").write_text(u.to_json())
    print(f"solved {P.num_intervals} slabs; final B-norm^2 {led.final_B_norm_sq:.6e}")
    return 0


def _study(args, exact_needed: bool) -> int:
    family = parse_family(args.family, levels=args.levels, seed=args.seed)
    prob = parse_problem(args.problem)
    exact = None
    if exact_needed:
        if prob.source is not None or not prob.triplet.is_spectral:
            raise InvalidArgumentError("convergence study needs the linear spectral problem")
        mu, u0 = prob.triplet.mu, prob.u0

        def exact(t, mu=mu, u0=u0, scale=prob.operator_scale):
            return u0 * np.exp(-scale * mu * t)

    report = harness.run_refinement_study(
        prob,
        family,
        degree=args.ell,
        p=args.p,
        r=args.r,
        q=args.q,
        exact=exact,
        seed=args.seed,
    )
    stem = _out_stem(args)
    written = reports.emit_refinement_report(report, stem, plots=not args.no_plots)
    for path in written:
        print(f"wrote {path}")
    if report.error_rate is not None:
        print(f"observed convergence rate: {report.error_rate:.3f}")
    if not report.all_passed:
        name, detail = report.failed_checks()[0]
        return _fail(name, detail)
    return 0


def cmd_constants(args) -> int:
    rows = []
    for ell in range(args.ell + 1):
        for p in P_VALUES:
            family = parse_family(args.family, levels=args.levels, seed=args.seed)
            cr = estimate_CR(family, ell, p, trials=args.trials, seed=args.seed)
            rows.append([ell, p, family.kind, cr, trace_constant(ell, p)])
    stem = _out_stem(args)
    reports.write_csv(
        stem.with_name(stem.name + "_constants.csv"),
        ["ell", "p", "family", "cr_estimate", "trace_constant"],
        rows,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgtime",
        description="DG time stepping diagnostics: reconstruction, stability, compactness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--ell", type=int, default=1, help="polynomial degree in time (0..6)")
        p.add_argument("--family", default="uniform:T=1,N=8", help="partition family spec")
        p.add_argument("--problem", default="heat", help="problem spec or preset")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="dgtime_run", help="output file stem")
        p.add_argument("--levels", type=int, default=4, help="number of refinement levels")
        p.add_argument("--trials", type=int, default=50)
        p.add_argument("--tol", type=float, default=1e-12, help="tolerance override")
        p.add_argument("--p", type=_parse_exponent, default=2.0)
        p.add_argument("--r", type=_parse_exponent, default=2.0)
        p.add_argument("--q", type=_parse_exponent, default=2.0)
        p.add_argument("--no-plots", action="store_true", help="skip figure output")

    for name, fn in [
        ("verify-reconstruction", cmd_verify_reconstruction),
        ("verify-identities", cmd_verify_identities),
        ("solve", cmd_solve),
        ("convergence", lambda a: _study(a, exact_needed=True)),
        ("compactness", lambda a: _study(a, exact_needed=False)),
        ("constants", cmd_constants),
    ]:
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 <= args.ell <= 6:
        print("error: --ell must lie in 0..6", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (InvalidArgumentError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
