"""Bochner norms L^p(0,T;Z) of piecewise polynomials and related scalar steps.

Finite p uses per-interval Gauss quadrature of ||u(t)||_Z^p (exact for
p = 2; oversampled otherwise).  p = infinity is approximated by dense
sampling at Chebyshev points plus interval endpoints; for the moderate
degrees used here the sup of a polynomial is resolved to spectral accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .legendre import PiecewisePoly, gauss_rule, legendre_values
from .spaces import SpaceTriplet
from .time_mesh import TimePartition, merge

INF_SAMPLES = 33  # Chebyshev points per interval for the p = infinity case


@dataclass(frozen=True)
class NormSpec:
    p: float
    space: SpaceTriplet
    which: str = "B"
    oversampling: int = 2

    def __post_init__(self):
        if not (self.p >= 1.0 or math.isinf(self.p)):
            raise InvalidArgumentError("exponent p must be >= 1")
        if self.oversampling < 1:
            raise InvalidArgumentError("oversampling must be >= 1")
        if self.which not in ("X", "B", "Y"):
            raise InvalidArgumentError(f"unknown norm {self.which!r}")


def _interval_sample_x(degree: int, oversampling: int):
    rule = gauss_rule(oversampling * (degree + 3))
    return rule.points, rule.weights


def _cheb_x():
    k = np.arange(INF_SAMPLES)
    x = np.cos(np.pi * (2 * k + 1) / (2 * INF_SAMPLES))
    return np.concatenate([[-1.0], np.sort(x), [1.0]])


def _values_at(u: PiecewisePoly, x: np.ndarray) -> np.ndarray:
    """Values on every interval at reference points x, shape (N, len(x), m)."""
    basis = legendre_values(x, u.degree)  # (deg+1, k)
    return np.einsum("ik,nim->nkm", basis, u.coeffs)


def bochner_norm(u: PiecewisePoly, spec: NormSpec) -> float:
    """||u||_{L^p(0,T;Z)} for the space/exponent in spec."""
    S = spec.space
    if math.isinf(spec.p):
        vals = _values_at(u, _cheb_x())
        return float(np.sqrt(S.norm_sq(spec.which, vals).max()))
    x, w = _interval_sample_x(u.degree, spec.oversampling)
    vals = _values_at(u, x)
    normp = S.norm_sq(spec.which, vals) ** (spec.p / 2.0)  # (N, k)
    per = normp @ w * (u.partition.steps / 2.0)
    return float(per.sum() ** (1.0 / spec.p))


def bochner_norm_fn(
    f,
    P: TimePartition,
    spec: NormSpec,
    points: int = 12,
) -> float:
    """Bochner norm of a general time function f(t) -> R^m by quadrature.

    With p = infinity, samples Chebyshev points plus endpoints.
    """
    S = spec.space
    if math.isinf(spec.p):
        xs = _cheb_x()
        best = 0.0
        for n in range(P.num_intervals):
            a, tau = P.nodes[n], P.steps[n]
            for x in xs:
                v = np.atleast_1d(np.asarray(f(a + 0.5 * tau * (x + 1.0))))
                best = max(best, float(S.norm_sq(spec.which, v)))
        return math.sqrt(best)
    rule = gauss_rule(points)
    total = 0.0
    for n in range(P.num_intervals):
        a, tau = P.nodes[n], P.steps[n]
        ts = a + 0.5 * tau * (rule.points + 1.0)
        vals = np.stack([np.atleast_1d(np.asarray(f(t), dtype=float)) for t in ts])
        normp = S.norm_sq(spec.which, vals) ** (spec.p / 2.0)
        total += float(normp @ rule.weights) * tau / 2.0
    return total ** (1.0 / spec.p)


def restrict(u: PiecewisePoly, P: TimePartition) -> PiecewisePoly:
    """Re-expand u on a refinement P of its partition (exact).

    Every interval of P must lie inside one interval of u.partition; the
    restriction of a polynomial is a polynomial of the same degree, so the
    modal coefficients are recovered exactly from Gauss-point values.
    """
    deg = u.degree
    rule = gauss_rule(deg + 1)
    basis = legendre_values(rule.points, deg)
    factors = (2.0 * np.arange(deg + 1) + 1.0) / 2.0
    N = P.num_intervals
    coeffs = np.empty((N, deg + 1, u.space_dim))
    coarse = u.partition
    for n in range(N):
        a, b = P.nodes[n], P.nodes[n + 1]
        src = coarse.interval_of(0.5 * (a + b))
        ts = a + 0.5 * (b - a) * (rule.points + 1.0)
        vals = u.eval_interval(src, ts)  # (k, m)
        coeffs[n] = factors[:, None] * np.einsum("ik,k,km->im", basis, rule.weights, vals)
    return PiecewisePoly(P, coeffs)


def bochner_distance(u1: PiecewisePoly, u2: PiecewisePoly, spec: NormSpec) -> float:
    """||u1 - u2|| on the merged partition (exact re-expansion)."""
    if u1.space_dim != u2.space_dim:
        raise InvalidArgumentError("space dimensions differ")
    Pm = merge(u1.partition, u2.partition)
    deg = max(u1.degree, u2.degree)
    w1 = restrict(u1.pad_degree(deg), Pm)
    w2 = restrict(u2.pad_degree(deg), Pm)
    return bochner_norm(w1 - w2, spec)


def shift_difference(u: PiecewisePoly, delta: float, spec: NormSpec) -> float:
    """||u(. + delta) - u(.)||_{L^p(0, T - delta; Z)}.

    Both u and its shift are piecewise polynomials on the partition of
    (0, T - delta) merging the original nodes with the shifted ones, so the
    difference is expanded there exactly.
    """
    P = u.partition
    T = P.T
    if not 0.0 < delta < T:
        raise InvalidArgumentError("need 0 < delta < T")
    tol = 1e-14 * T
    cand = np.concatenate([P.nodes, P.nodes - delta])
    cand = np.sort(cand[(cand > tol) & (cand < T - delta - tol)])
    keep = [0.0]
    for t in cand:
        if t - keep[-1] > tol:
            keep.append(float(t))
    keep.append(T - delta)
    Pd = TimePartition(np.asarray(keep))
    deg = u.degree
    rule = gauss_rule(deg + 1)
    basis = legendre_values(rule.points, deg)
    factors = (2.0 * np.arange(deg + 1) + 1.0) / 2.0
    coeffs = np.empty((Pd.num_intervals, deg + 1, u.space_dim))
    for n in range(Pd.num_intervals):
        a, b = Pd.nodes[n], Pd.nodes[n + 1]
        mid = 0.5 * (a + b)
        ts = a + 0.5 * (b - a) * (rule.points + 1.0)
        here = u.eval_interval(P.interval_of(mid), ts)
        there = u.eval_interval(P.interval_of(mid + delta), ts + delta)
        vals = there - here
        coeffs[n] = factors[:, None] * np.einsum("ik,k,km->im", basis, rule.weights, vals)
    return bochner_norm(PiecewisePoly(Pd, coeffs), spec)


def holder_step_check(jump_B_norms, taus, p: float, T: float | None = None, tau_max: float | None = None):
    """Both sides of the Hoelder step for 1 <= p < 2.

    lhs = (sum tau_n j_n^p)^(1/p),
    rhs = T^((2-p)/(2p)) * tau_max^(1/2) * (sum j_n^2)^(1/2).
    """
    j = np.asarray(jump_B_norms, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if j.shape != taus.shape:
        raise InvalidArgumentError("jump and step lists must have equal length")
    if not 1.0 <= p < 2.0:
        raise InvalidArgumentError("holder step needs p in [1, 2)")
    if T is None:
        T = float(taus.sum())
    if tau_max is None:
        tau_max = float(taus.max())
    lhs = float((taus * j**p).sum() ** (1.0 / p))
    rhs = float(T ** ((2.0 - p) / (2.0 * p)) * tau_max**0.5 * np.sqrt((j**2).sum()))
    return lhs, rhs


def vector_norm_step_check(jump_B_norms, taus, p: float):
    """Both sides of the p >= 2 step: (sum tau j^p)^(1/p) <= tau^(1/p) ||j||_2."""
    j = np.asarray(jump_B_norms, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if p < 2.0:
        raise InvalidArgumentError("vector norm step needs p >= 2")
    tau = float(taus.max())
    lhs = float((taus * j**p).sum() ** (1.0 / p))
    rhs = float(tau ** (1.0 / p) * np.sqrt((j**2).sum()))
    return lhs, rhs
