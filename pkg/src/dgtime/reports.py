"""Report emission: CSV tables, JSON summaries, and companion figures.

All output is deterministic for a fixed config and seed: floats are
printed with %.17g, JSON keys are sorted, and figure metadata that would
embed timestamps or library versions is stripped.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import RefinementReport  # noqa: E402


def fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines += [",".join(fmt(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def default(obj):
        try:
            return float(obj)
        except (TypeError, ValueError):
            return list(obj)

    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=default) + "\n")
    return path


def _savefig(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def figure_cauchy(report: RefinementReport, path):
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    taus = [rec.tau_max for rec in report.levels[:-1]]
    if report.cauchy and all(v > 0 for v in report.cauchy):
        ax.loglog(taus, report.cauchy, "o-", label="consecutive levels")
    if report.proxy_distances and all(v > 0 for v in report.proxy_distances):
        ax.loglog(taus, report.proxy_distances, "s--", label="to finest level")
    ax.set_xlabel("max time step")
    ax.set_ylabel(f"L^{report.q:g}(0,T;B) distance")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _savefig(fig, path)


def figure_hypotheses(report: RefinementReport, path):
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    lv = [rec.level for rec in report.levels]
    for key, label in [
        ("h1_energy", "h1 energy"),
        ("h2_dt_recon_dual", "h2 dual norm"),
        ("h3_jump_sum_B_sq", "h3 jump sum"),
    ]:
        ax.plot(lv, [rec.ledger[key] for rec in report.levels], "o-", label=label)
    ax2 = ax.twinx()
    ax2.semilogy(
        lv,
        [rec.quasi_ratio for rec in report.levels],
        "k:^",
        label="quasi-uniformity ratio",
    )
    ax2.set_ylabel("quasi-uniformity ratio")
    ax.set_xlabel("refinement level")
    ax.set_ylabel("hypothesis quantity")
    ax.legend(loc="upper left")
    ax.grid(True, alpha=0.3)
    return _savefig(fig, path)


def figure_errors(report: RefinementReport, path):
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    taus = [rec.tau_max for rec in report.levels]
    ax.loglog(taus, report.errors, "o-", label="error")
    if report.error_rate is not None:
        ax.set_title(f"observed rate {report.error_rate:.2f}")
    ax.set_xlabel("max time step")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _savefig(fig, path)


def figure_shift(report: RefinementReport, path):
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    if report.shift_values and all(v > 0 for v in report.shift_values):
        ax.loglog(report.shift_deltas, report.shift_values, "o-")
        if report.shift_exponent is not None:
            ax.set_title(f"fitted shift exponent s = {report.shift_exponent:.3f}")
    ax.set_xlabel("shift delta")
    ax.set_ylabel("shift difference norm")
    ax.grid(True, which="both", alpha=0.3)
    return _savefig(fig, path)


LEVEL_HEADER = [
    "level",
    "N_intervals",
    "tau_max",
    "tau_min",
    "step_ratio_constant",
    "quasi_uniformity_ratio",
    "final_B_norm_sq",
    "h3_jump_sum_B_sq",
    "h1_energy",
    "h2_dt_recon_dual",
    "F_dual",
    "energy_identity_residual",
]


def emit_refinement_report(report: RefinementReport, stem: Path, plots: bool = True):
    """Write all tables, the JSON summary, and (optionally) figures.

    Returns the list of written paths.
    """
    stem = Path(stem)
    written = []
    rows = []
    for rec in report.levels:
        led = rec.ledger
        rows.append(
            [
                rec.level,
                rec.N,
                rec.tau_max,
                rec.tau_min,
                rec.step_ratio,
                rec.quasi_ratio,
                led["final_B_norm_sq"],
                led["h3_jump_sum_B_sq"],
                led["h1_energy"],
                led["h2_dt_recon_dual"],
                led["F_dual"],
                led["energy_identity_residual"]
                if led["energy_identity_residual"] is not None
                else float("nan"),
            ]
        )
    written.append(write_csv(stem.with_name(stem.name + "_levels.csv"), LEVEL_HEADER, rows))

    cauchy_rows = [
        [i, report.levels[i].tau_max, d, pd]
        for i, (d, pd) in enumerate(zip(report.cauchy, report.proxy_distances))
    ]
    written.append(
        write_csv(
            stem.with_name(stem.name + "_cauchy.csv"),
            ["level", "tau_max", "cauchy_distance_LqB", "distance_to_finest_LqB"],
            cauchy_rows,
        )
    )

    if report.errors:
        written.append(
            write_csv(
                stem.with_name(stem.name + "_errors.csv"),
                ["level", "tau_max", "error_LqB"],
                [
                    [rec.level, rec.tau_max, e]
                    for rec, e in zip(report.levels, report.errors)
                ],
            )
        )

    written.append(
        write_csv(
            stem.with_name(stem.name + "_shift.csv"),
            ["delta", "shift_difference_LrY"],
            list(zip(report.shift_deltas, report.shift_values)),
        )
    )

    summary = {
        "family": {
            "kind": report.family.kind,
            "T": report.family.T,
            "levels": list(report.family.levels),
            "sigma": report.family.sigma,
            "seed": report.family.seed,
            "ratio_cap": report.family.ratio_cap,
        },
        "degree": report.degree,
        "p": report.p,
        "r": report.r,
        "q": report.q,
        "u0": list(report.u0),
        "cr_estimate": report.cr_estimate,
        "error_rate": report.error_rate,
        "shift_exponent": report.shift_exponent,
        "shift_constant": report.shift_constant,
        "checks": [
            {"name": name, "passed": bool(ok), "detail": detail}
            for name, ok, detail in report.checks
        ],
        "all_passed": report.all_passed,
    }
    written.append(write_json(stem.with_name(stem.name + "_summary.json"), summary))

    if plots:
        written.append(figure_cauchy(report, stem.with_name(stem.name + "_cauchy.png")))
        written.append(
            figure_hypotheses(report, stem.with_name(stem.name + "_hypotheses.png"))
        )
        written.append(figure_shift(report, stem.with_name(stem.name + "_shift.png")))
        if report.errors:
            written.append(
                figure_errors(report, stem.with_name(stem.name + "_errors.png"))
            )
    return written
