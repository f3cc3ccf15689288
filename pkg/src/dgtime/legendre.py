"""Legendre bases, Gauss quadrature, and vector-valued piecewise polynomials.

All polynomials are stored modally with respect to the mapped Legendre
basis L_{n,i}(t) = P_i(2(t - t_{n-1})/tau_n - 1), normalized by P_i(1) = 1.
In this representation the L2(0,T) projection is diagonal and time
integrals of polynomial products reduce to closed-form reference matrices,
which is what lets the discrete identities hold to machine precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .time_mesh import TimePartition


def legendre_values(x, degree: int) -> np.ndarray:
    """P_0..P_degree at points x via the three-term recurrence.

    Returns an array of shape (degree+1,) + shape(x).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((degree + 1,) + x.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = x
    for i in range(1, degree):
        out[i + 1] = ((2 * i + 1) * x * out[i] - i * out[i - 1]) / (i + 1)
    return out


@lru_cache(maxsize=None)
def deriv_matrix(degree: int) -> np.ndarray:
    """D with (Dc) the reference-interval derivative coefficients of c.

    d_j = (2j+1) * sum of c_i over i > j with i - j odd.
    """
    D = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        for i in range(j + 1, degree + 1):
            if (i - j) % 2 == 1:
                D[j, i] = 2 * j + 1
    return D


@lru_cache(maxsize=None)
def stiff_ref(degree: int) -> np.ndarray:
    """S[j, i] = integral over [-1,1] of P_i' P_j = 2 for i > j, i-j odd."""
    S = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        for i in range(j + 1, degree + 1):
            if (i - j) % 2 == 1:
                S[j, i] = 2.0
    return S


def mass_ref_diag(degree: int) -> np.ndarray:
    """Diagonal of the reference mass matrix: 2/(2i+1)."""
    return 2.0 / (2.0 * np.arange(degree + 1) + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre points/weights on [-1, 1]."""

    points: np.ndarray
    weights: np.ndarray
    exactness: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


def gauss_rule(k: int) -> QuadratureRule:
    """k-point Gauss-Legendre rule, exact through degree 2k - 1."""
    if k < 1:
        raise InvalidArgumentError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(k)
    return QuadratureRule(points=x, weights=w, exactness=2 * k - 1)


def mapped_legendre_eval(P: TimePartition, n: int, i: int, t) -> float:
    """L_{n,i}(t) on the closure of interval n (0-based)."""
    if not 0 <= n < P.num_intervals:
        raise InvalidArgumentError(f"interval index {n} out of range")
    a, b = P.nodes[n], P.nodes[n + 1]
    tol = 1e-12 * (P.T + 1.0)
    t = np.asarray(t, dtype=float)
    if np.any(t < a - tol) or np.any(t > b + tol):
        raise InvalidArgumentError(f"t outside interval [{a}, {b}]")
    x = 2.0 * (t - a) / (b - a) - 1.0
    return legendre_values(np.clip(x, -1.0, 1.0), i)[i]


@dataclass(frozen=True)
class PiecewisePoly:
    """Element of P^l_tau(R^m): modal coefficients per interval.

    coeffs has shape (N, degree+1, m); coeffs[n, i] is the R^m coefficient
    of L_{n,i}.  Immutable; all operations return new values.
    """

    partition: TimePartition
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3:
            raise InvalidArgumentError("coeffs must have shape (N, degree+1, m)")
        if c.shape[0] != self.partition.num_intervals:
            raise InvalidArgumentError("coeff blocks do not match interval count")
        object.__setattr__(self, "coeffs", c)
        c.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def space_dim(self) -> int:
        return self.coeffs.shape[2]

    def eval_interval(self, n: int, t) -> np.ndarray:
        """Evaluate interval n's polynomial at times t (closure allowed)."""
        a, b = self.partition.nodes[n], self.partition.nodes[n + 1]
        x = 2.0 * (np.asarray(t, dtype=float) - a) / (b - a) - 1.0
        basis = legendre_values(np.clip(x, -1.0, 1.0), self.degree)
        return np.tensordot(basis, self.coeffs[n], axes=([0], [0]))

    def eval(self, t: float, side: str = "right") -> np.ndarray:
        """One-sided evaluation; sides differ only at interior nodes."""
        P = self.partition
        if side not in ("left", "right"):
            raise InvalidArgumentError(f"side must be left or right, got {side!r}")
        if t < 0.0 or t > P.T:
            raise InvalidArgumentError(f"t={t} outside [0, {P.T}]")
        if side == "left" and t <= 0.0:
            raise InvalidArgumentError("left limit undefined at t = 0")
        if side == "right" and t >= P.T:
            raise InvalidArgumentError("right limit undefined at t = T")
        idx = np.searchsorted(P.nodes, t)
        if idx < P.nodes.size and P.nodes[idx] == t and 0 < idx < P.nodes.size - 1:
            n = idx - 1 if side == "left" else idx
        else:
            n = P.interval_of(t)
        return self.eval_interval(n, t)

    def left_value(self, n: int) -> np.ndarray:
        """Value u(t_n^-), n in 1..N (0-based interval n-1 at its right end)."""
        signs = np.ones(self.degree + 1)
        return signs @ self.coeffs[n - 1]

    def right_value(self, n: int) -> np.ndarray:
        """Value u(t_n^+), n in 0..N-1 (interval n at its left end)."""
        signs = (-1.0) ** np.arange(self.degree + 1)
        return signs @ self.coeffs[n]

    def node_left_values(self) -> np.ndarray:
        """u(t_n^-) for n = 1..N, shape (N, m)."""
        return np.ones(self.degree + 1) @ self.coeffs

    def node_right_values(self) -> np.ndarray:
        """u(t_n^+) for n = 0..N-1, shape (N, m)."""
        return ((-1.0) ** np.arange(self.degree + 1)) @ self.coeffs

    def jump(self, n: int, u0: np.ndarray) -> np.ndarray:
        """[u]_n = u(t_n^+) - u(t_n^-); at n = 0, u(0^+) - u0."""
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (self.space_dim,):
            raise InvalidArgumentError("u0 has wrong dimension")
        if not 0 <= n < self.partition.num_intervals:
            raise InvalidArgumentError(f"node index {n} out of range")
        if n == 0:
            return self.right_value(0) - u0
        return self.right_value(n) - self.left_value(n)

    def jumps(self, u0: np.ndarray) -> np.ndarray:
        """All jumps [u]_0, ..., [u]_{N-1}, shape (N, m)."""
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (self.space_dim,):
            raise InvalidArgumentError("u0 has wrong dimension")
        rights = self.node_right_values()
        lefts = np.vstack([u0[None, :], self.node_left_values()[:-1]])
        return rights - lefts

    def derivative(self) -> "PiecewisePoly":
        """Interval-wise time derivative, degree max(degree-1, 0); exact."""
        ell = self.degree
        if ell == 0:
            return PiecewisePoly(self.partition, np.zeros_like(self.coeffs))
        D = deriv_matrix(ell)[:ell, :]
        dc = np.einsum("ji,nik->njk", D, self.coeffs)
        dc *= (2.0 / self.partition.steps)[:, None, None]
        return PiecewisePoly(self.partition, dc)

    def pad_degree(self, degree: int) -> "PiecewisePoly":
        """Same function represented with a higher degree."""
        if degree < self.degree:
            raise InvalidArgumentError("pad_degree cannot lower the degree")
        if degree == self.degree:
            return self
        N, _, m = self.coeffs.shape
        c = np.zeros((N, degree + 1, m))
        c[:, : self.degree + 1, :] = self.coeffs
        return PiecewisePoly(self.partition, c)

    def scale(self, alpha: float) -> "PiecewisePoly":
        return PiecewisePoly(self.partition, alpha * self.coeffs)

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if other.partition is not self.partition and not np.array_equal(
            other.partition.nodes, self.partition.nodes
        ):
            raise InvalidArgumentError("partitions differ; use bochner.restrict")
        d = max(self.degree, other.degree)
        return PiecewisePoly(
            self.partition,
            self.pad_degree(d).coeffs + other.pad_degree(d).coeffs,
        )

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self + other.scale(-1.0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "partition": list(self.partition.nodes),
                "degree": self.degree,
                "space_dim": self.space_dim,
                "coeffs": self.coeffs.reshape(-1, self.space_dim).tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "PiecewisePoly":
        data = json.loads(text)
        P = TimePartition(np.asarray(data["partition"], dtype=float))
        c = np.asarray(data["coeffs"], dtype=float).reshape(
            P.num_intervals, data["degree"] + 1, data["space_dim"]
        )
        return PiecewisePoly(P, c)


def constant_poly(P: TimePartition, value, degree: int = 0) -> PiecewisePoly:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    c = np.zeros((P.num_intervals, degree + 1, value.size))
    c[:, 0, :] = value
    return PiecewisePoly(P, c)


def random_poly(rng, P: TimePartition, degree: int, m: int, scale: float = 1.0) -> PiecewisePoly:
    """Modal coefficients uniform in [-scale, scale]."""
    c = rng.uniform(-scale, scale, size=(P.num_intervals, degree + 1, m))
    return PiecewisePoly(P, c)


def project_time(f, P: TimePartition, degree: int, rule: QuadratureRule | None = None) -> PiecewisePoly:
    """L2(0,T)-orthogonal projection of f onto P^degree_tau.

    f maps a time to an R^m vector (scalars are promoted to m = 1).
    Modal coefficients: c_{n,i} = (2i+1)/tau_n * int_{I_n} f L_{n,i} dt.
    """
    if rule is None:
        rule = gauss_rule(degree + 3)
    if rule.exactness < 2 * degree:
        raise ConfigurationError(
            f"quadrature exactness {rule.exactness} < 2*degree = {2 * degree}"
        )
    f0 = np.atleast_1d(np.asarray(f(P.nodes[0] + 0.5 * P.steps[0]), dtype=float))
    m = f0.size
    N = P.num_intervals
    basis = legendre_values(rule.points, degree)  # (degree+1, k)
    factors = (2.0 * np.arange(degree + 1) + 1.0) / 2.0
    coeffs = np.empty((N, degree + 1, m))
    for n in range(N):
        a, tau = P.nodes[n], P.steps[n]
        ts = a + 0.5 * tau * (rule.points + 1.0)
        vals = np.stack(
            [np.atleast_1d(np.asarray(f(t), dtype=float)) for t in ts]
        )  # (k, m)
        moments = np.einsum("ik,k,km->im", basis, rule.weights, vals)
        coeffs[n] = factors[:, None] * moments
    return PiecewisePoly(P, coeffs)
