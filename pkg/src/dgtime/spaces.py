"""Finite-dimensional Gelfand triplets X -> B -> Y = X'.

Two realizations: a spectral one (diagonal norms from a positive
eigenvalue list, e.g. the Dirichlet Laplacian modes mu_k = (k*pi)^2) and a
matrix one built from an SPD mass/stiffness pair.  The spectral variant is
the default model: its dual norm and projections are exact, so time
discretization effects are isolated from spatial algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgumentError, UnsupportedConfigurationError


@dataclass(frozen=True)
class SpaceTriplet:
    """Norms ||.||_X, ||.||_B, ||.||_Y on R^m.

    spectral: ||u||_B^2 = sum u_k^2, ||u||_X^2 = sum mu_k u_k^2,
    ||u||_Y^2 = sum u_k^2/mu_k.
    matrix:   ||u||_B^2 = u'Mu, ||u||_X^2 = u'Ku, ||u||_Y^2 = (Mu)'K^{-1}(Mu).
    """

    dim: int
    mu: np.ndarray | None = None
    M: np.ndarray | None = None
    K: np.ndarray | None = None
    theta: float = 0.5
    C_theta: float = 1.0
    _chol_K: tuple = field(default=None, repr=False)

    @property
    def is_spectral(self) -> bool:
        return self.mu is not None

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise InvalidArgumentError(
                f"vector dimension {u.shape[-1]} != triplet dimension {self.dim}"
            )
        return u

    def inner_b(self, u, v) -> float:
        u, v = self._check(u), self._check(v)
        if self.is_spectral:
            return float(u @ v)
        return float(u @ (self.M @ v))

    def norm(self, which: str, u) -> float:
        """which in {"X", "B", "Y"}."""
        return float(np.sqrt(self.norm_sq(which, u)))

    def norm_sq(self, which: str, u):
        """Squared norm; vectorized over leading axes."""
        u = self._check(u)
        if self.is_spectral:
            if which == "B":
                w = np.ones(self.dim)
            elif which == "X":
                w = self.mu
            elif which == "Y":
                w = 1.0 / self.mu
            else:
                raise InvalidArgumentError(f"unknown norm {which!r}")
            return np.einsum("...k,k,...k->...", u, w, u)
        if which == "B":
            return np.einsum("...i,ij,...j->...", u, self.M, u)
        if which == "X":
            return np.einsum("...i,ij,...j->...", u, self.K, u)
        if which == "Y":
            Mu = u @ self.M.T
            flat = Mu.reshape(-1, self.dim)
            sol = sla.cho_solve(self._chol_K, flat.T).T.reshape(Mu.shape)
            return np.einsum("...i,...i->...", Mu, sol)
        raise InvalidArgumentError(f"unknown norm {which!r}")

    def riesz_dual_pairing(self, F, v) -> float:
        """<F, v> with F given through its Riesz representative in B."""
        return self.inner_b(F, v)


def spectral_triplet(mu, theta: float = 0.5, C_theta: float = 1.0) -> SpaceTriplet:
    """Triplet from a nondecreasing positive eigenvalue list."""
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise InvalidArgumentError("mu must be a nonempty 1-d list")
    if np.any(mu <= 0.0):
        raise InvalidArgumentError("eigenvalues must be positive")
    if np.any(np.diff(mu) < 0.0):
        raise InvalidArgumentError("eigenvalues must be nondecreasing")
    mu = mu.copy()
    mu.setflags(write=False)
    return SpaceTriplet(dim=mu.size, mu=mu, theta=theta, C_theta=C_theta)


def laplace_triplet(m: int, theta: float = 0.5, C_theta: float = 1.0) -> SpaceTriplet:
    """Sine-spectral Dirichlet Laplacian on (0,1): mu_k = (k*pi)^2."""
    k = np.arange(1, m + 1)
    return spectral_triplet((k * np.pi) ** 2, theta=theta, C_theta=C_theta)


def matrix_triplet(M, K, theta: float = 0.5, C_theta: float = 1.0) -> SpaceTriplet:
    """Triplet from SPD mass M and stiffness K; K factorized once."""
    M = np.asarray(M, dtype=float)
    K = np.asarray(K, dtype=float)
    if M.shape != K.shape or M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError("M and K must be square and of equal shape")
    try:
        chol = sla.cho_factor(K)
        sla.cho_factor(M)
    except sla.LinAlgError as exc:
        raise InvalidArgumentError(f"mass/stiffness pair not SPD: {exc}") from exc
    M, K = M.copy(), K.copy()
    M.setflags(write=False)
    K.setflags(write=False)
    return SpaceTriplet(
        dim=M.shape[0], M=M, K=K, theta=theta, C_theta=C_theta, _chol_K=chol
    )


def spectralize(S: SpaceTriplet) -> tuple:
    """Generalized eigendecomposition K V = M V diag(mu).

    Returns (triplet, V) with V the M-orthonormal basis; the spectral
    triplet reproduces the matrix norms through coordinates V^{-1} u.
    Used as the oracle for matrix/spectral norm agreement.
    """
    if S.is_spectral:
        raise InvalidArgumentError("triplet is already spectral")
    mu, V = sla.eigh(S.K, S.M)
    return spectral_triplet(mu, theta=S.theta, C_theta=S.C_theta), V


def interpolation_ratio(S: SpaceTriplet, u) -> float:
    """||u||_B / (||u||_X^theta * ||u||_Y^(1-theta)); <= C_theta must hold."""
    u = np.asarray(u, dtype=float)
    nb = S.norm("B", u)
    if nb == 0.0:
        raise InvalidArgumentError("interpolation ratio undefined for u = 0")
    return nb / (S.norm("X", u) ** S.theta * S.norm("Y", u) ** (1.0 - S.theta))


@dataclass(frozen=True)
class SubspaceSelector:
    """X_tau = span of the first m_tau spectral modes."""

    m_tau: int

    def __post_init__(self):
        if self.m_tau < 0:
            raise InvalidArgumentError("m_tau must be nonnegative")


def b_project(S: SpaceTriplet, sel: SubspaceSelector, u) -> np.ndarray:
    """B-orthogonal projection onto X_tau (coefficient truncation)."""
    if not S.is_spectral:
        raise UnsupportedConfigurationError(
            "b_project needs the spectral variant (no modal basis supplied)"
        )
    u = S._check(u)
    if sel.m_tau > S.dim:
        raise InvalidArgumentError("m_tau exceeds the triplet dimension")
    out = u.copy()
    out[..., sel.m_tau :] = 0.0
    return out


def parse_triplet(text: str) -> SpaceTriplet:
    """Parse "spectral:m=64,laplace1d" or "matrix:M=<file>,K=<file>"."""
    from scipy.io import mmread

    if ":" not in text:
        raise InvalidArgumentError(f"triplet spec {text!r} missing ':'")
    kind, body = text.split(":", 1)
    kv = dict(item.split("=", 1) for item in body.split(",") if "=" in item)
    flags = {item for item in body.split(",") if "=" not in item and item}
    if kind == "spectral":
        m = int(kv.get("m", 64))
        if flags - {"laplace1d"}:
            raise InvalidArgumentError(f"unknown spectral flags: {flags}")
        return laplace_triplet(m)
    if kind == "matrix":
        try:
            mpath, kpath = Path(kv["M"]), Path(kv["K"])
        except KeyError as exc:
            raise InvalidArgumentError(f"matrix spec missing {exc}") from exc
        for p in (mpath, kpath):
            if not p.exists():
                raise InvalidArgumentError(f"matrix file not found: {p}")
        def load(path):
            mat = mmread(str(path))
            return np.asarray(mat.todense()) if hasattr(mat, "todense") else np.asarray(mat)

        return matrix_triplet(load(mpath), load(kpath))
    raise InvalidArgumentError(f"unknown triplet kind {kind!r}")
