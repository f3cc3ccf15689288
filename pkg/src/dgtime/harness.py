"""Refinement studies: hypothesis ledgers, Cauchy decay, observed rates.

The harness solves the same problem on every level of a partition family,
checks that the hypothesis quantities stay uniformly bounded while the
quasi-uniformity ratio degrades, and records the Cauchy distances between
consecutive solutions as the desk-scale witness of strong convergence.
It never claims more than that: no limit object is computed beyond the
finest level as proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bochner import NormSpec, bochner_distance, shift_difference
from .errors import InvalidArgumentError
from .legendre import PiecewisePoly
from .parabolic import (
    ParabolicProblem,
    StateSource,
    stability_ledger,
    solve_linear,
    solve_semilinear,
)
from .reconstruction import estimate_CR
from .spaces import SpaceTriplet
from .time_mesh import PartitionFamily, step_ratio_constant

BOUNDEDNESS_SLACK = 1.1  # level values may exceed the running max by 10%


def fit_rate(values, taus) -> float:
    """Least-squares slope of log(value) against log(tau)."""
    values = np.asarray(values, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if values.size < 2 or values.size != taus.size:
        raise InvalidArgumentError("need at least two (value, tau) pairs")
    if np.any(values <= 0.0) or np.any(taus <= 0.0):
        raise InvalidArgumentError("values and taus must be positive")
    return float(np.polyfit(np.log(taus), np.log(values), 1)[0])


def check_bounded(values, cap: float | None = None) -> bool:
    """10%-of-running-max rule, optionally with an absolute cap."""
    values = list(values)
    running = values[0]
    for v in values[1:]:
        ok = v <= BOUNDEDNESS_SLACK * running or (cap is not None and v <= cap)
        if not ok:
            return False
        running = max(running, v)
    return True


def admissible_q_max(p: float, r: float, theta: float, s: float = 1.0) -> float:
    """Supremum of exponents q for compactness in L^q(0,T;B).

    q < r p / ((1 - theta)(1 - s r) p + theta r); returns inf when the
    denominator is nonpositive (every finite q is admissible).
    """
    if math.isinf(p) or math.isinf(r):
        return math.inf
    denom = (1.0 - theta) * (1.0 - s * r) * p + theta * r
    if denom <= 0.0:
        return math.inf
    return r * p / denom


def shift_exponent_study(
    u: PiecewisePoly, deltas, r: float, S: SpaceTriplet, which: str = "Y"
):
    """Fit ||u(.+d) - u|| ~ C_s d^s over the given shifts; returns (s, C_s)."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size < 2:
        raise InvalidArgumentError("need at least two shifts")
    spec = NormSpec(p=r, space=S, which=which)
    vals = np.array([shift_difference(u, d, spec) for d in deltas])
    if np.any(vals <= 0.0):
        return 0.0, 0.0, vals
    s = fit_rate(vals, deltas)
    C_s = float(np.exp(np.mean(np.log(vals) - s * np.log(deltas))))
    return s, C_s, vals


@dataclass
class LevelRecord:
    level: int
    N: int
    tau_max: float
    tau_min: float
    step_ratio: float
    quasi_ratio: float
    ledger: dict


@dataclass
class RefinementReport:
    family: PartitionFamily
    degree: int
    p: float
    r: float
    q: float
    u0: np.ndarray
    levels: list = field(default_factory=list)  # LevelRecord
    cauchy: list = field(default_factory=list)  # consecutive distances
    proxy_distances: list = field(default_factory=list)  # to finest level
    errors: list = field(default_factory=list)  # vs exact, if supplied
    error_rate: float | None = None
    shift_deltas: list = field(default_factory=list)
    shift_values: list = field(default_factory=list)
    shift_exponent: float | None = None
    shift_constant: float | None = None
    cr_estimate: float | None = None
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def all_passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failed_checks(self):
        return [(name, detail) for name, ok, detail in self.checks if not ok]


def run_refinement_study(
    prob: ParabolicProblem,
    family: PartitionFamily,
    degree: int,
    p: float = 2.0,
    r: float = 2.0,
    q: float = 2.0,
    exact=None,
    deltas=None,
    cr_trials: int = 40,
    seed: int = 0,
) -> RefinementReport:
    """Solve on every family level and assemble the full report.

    exact: optional callable t -> R^m used for error rates.
    deltas: optional shifts for the shift-difference diagnostic (defaults
    to T/8 ... T/128 on the finest solution).
    """
    if family.num_levels < 3:
        raise InvalidArgumentError("need at least three refinement levels")
    S = prob.triplet
    report = RefinementReport(
        family=family, degree=degree, p=p, r=r, q=q, u0=prob.u0
    )
    semilinear = isinstance(prob.source, StateSource)
    solutions = []
    for i in range(family.num_levels):
        P = family.build(i)
        try:
            u = (
                solve_semilinear(prob, P, degree)
                if semilinear
                else solve_linear(prob, P, degree)
            )
        except Exception as exc:
            raise RuntimeError(f"solve failed at level {i}: {exc}") from exc
        solutions.append(u)
        led = stability_ledger(prob, u, p=p, r=r)
        report.levels.append(
            LevelRecord(
                level=i,
                N=P.num_intervals,
                tau_max=P.tau_max,
                tau_min=P.tau_min,
                step_ratio=step_ratio_constant(P),
                quasi_ratio=P.quasi_uniformity_ratio,
                ledger=led.as_dict(),
            )
        )

    qspec = NormSpec(p=q, space=S, which="B")
    for a, b in zip(solutions[:-1], solutions[1:]):
        report.cauchy.append(bochner_distance(a, b, qspec))
    for u in solutions[:-1]:
        report.proxy_distances.append(bochner_distance(u, solutions[-1], qspec))

    if exact is not None:
        for u in solutions:
            err = _error_vs_exact(u, exact, qspec)
            report.errors.append(err)
        taus = [rec.tau_max for rec in report.levels]
        if all(e > 0 for e in report.errors):
            report.error_rate = fit_rate(report.errors, taus)

    finest = solutions[-1]
    T = family.T
    if deltas is None:
        deltas = [T / 8, T / 16, T / 32, T / 64, T / 128]
    s_fit, C_s, vals = shift_exponent_study(finest, deltas, r, S, which="Y")
    report.shift_deltas = list(deltas)
    report.shift_values = list(vals)
    report.shift_exponent = s_fit
    report.shift_constant = C_s

    report.cr_estimate = estimate_CR(
        family, degree, p, trials=cr_trials, seed=seed, S=None, space_dim=3
    )

    _run_checks(report)
    return report


def _error_vs_exact(u: PiecewisePoly, exact, spec: NormSpec) -> float:
    """L^q(0,T;B) distance between u and a smooth exact solution."""
    from .bochner import bochner_norm_fn

    def diff(t):
        n = u.partition.interval_of(t)
        return u.eval_interval(n, t) - np.atleast_1d(np.asarray(exact(t), dtype=float))

    return bochner_norm_fn(diff, u.partition, spec, points=u.degree + 8)


def _run_checks(report: RefinementReport):
    levels = report.levels
    tau = [rec.tau_max for rec in levels]
    report.checks.append(
        (
            "tau_max_strictly_decreasing",
            all(b < a for a, b in zip(tau[:-1], tau[1:])),
            f"tau_max per level: {tau}",
        )
    )
    declared = report.family.declared_ratio_constant
    ratios = [rec.step_ratio for rec in levels]
    report.checks.append(
        (
            "step_ratio_bounded",
            all(rho <= declared * (1 + 1e-12) for rho in ratios),
            f"step ratios {ratios} vs declared {declared}",
        )
    )
    cap0 = None
    for name in ("h1_energy", "h2_dt_recon_dual", "h3_jump_sum_B_sq"):
        vals = [rec.ledger[name] for rec in levels]
        report.checks.append(
            (
                f"bounded_{name}",
                check_bounded(vals, cap=cap0),
                f"{name} per level: {vals}",
            )
        )
    d = report.cauchy
    monotone = all(b < a for a, b in zip(d[:-1], d[1:])) if len(d) >= 2 else True
    trivial = all(x <= 1e-14 for x in d)
    report.checks.append(
        (
            "cauchy_decreasing",
            trivial or monotone,
            f"cauchy distances: {d}",
        )
    )
    if report.errors and report.error_rate is not None:
        report.checks.append(
            (
                "errors_decreasing",
                all(b < a for a, b in zip(report.errors[:-1], report.errors[1:])),
                f"errors: {report.errors}",
            )
        )
