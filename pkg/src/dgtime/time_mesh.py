"""Time partitions of (0, T) and refinement families.

Partitions are immutable node arrays.  Families generate sequences of
partitions whose maximum step decreases while the consecutive step ratio
stays bounded; the graded ("geometric") family additionally lets the
max/min step ratio blow up, which is the interesting stress case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

NODE_TOL = 1e-14  # relative to T; collapse tolerance for coincident nodes


@dataclass(frozen=True)
class TimePartition:
    """Strictly increasing nodes 0 = t_0 < ... < t_N = T."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidArgumentError("partition needs at least two nodes")
        if nodes[0] != 0.0:
            raise InvalidArgumentError("first node must be exactly 0")
        if not np.all(np.diff(nodes) > 0.0):
            raise InvalidArgumentError("nodes must be strictly increasing")
        nodes.setflags(write=False)

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def num_intervals(self) -> int:
        return self.nodes.size - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def tau_max(self) -> float:
        return float(self.steps.max())

    @property
    def tau_min(self) -> float:
        return float(self.steps.min())

    @property
    def quasi_uniformity_ratio(self) -> float:
        return self.tau_max / self.tau_min

    def interval_of(self, t: float) -> int:
        """0-based index of the interval whose closure contains t."""
        T = self.T
        if t < -NODE_TOL * T or t > T * (1.0 + NODE_TOL):
            raise InvalidArgumentError(f"t={t} outside [0, {T}]")
        n = int(np.searchsorted(self.nodes, t, side="right")) - 1
        return min(max(n, 0), self.num_intervals - 1)

    def to_json(self) -> str:
        return json.dumps(list(self.nodes))

    @staticmethod
    def from_json(text: str) -> "TimePartition":
        return TimePartition(np.asarray(json.loads(text), dtype=float))


def build_uniform(T: float, N: int) -> TimePartition:
    """Equispaced partition of (0, T) into N intervals."""
    if T <= 0 or N < 1:
        raise InvalidArgumentError("need T > 0 and N >= 1")
    nodes = np.linspace(0.0, T, N + 1)
    nodes[0], nodes[-1] = 0.0, T
    return TimePartition(nodes)


def build_geometric(T: float, N: int, sigma: float) -> TimePartition:
    """Partition graded toward t = 0: t_n = T * sigma**(N - n) for n >= 1.

    The consecutive step ratio is bounded by max(1/sigma, (1-sigma)/sigma)
    independently of N, while tau_max/tau_min grows like sigma**(1-N).
    """
    if T <= 0 or N < 1:
        raise InvalidArgumentError("need T > 0 and N >= 1")
    if not 0.0 < sigma < 1.0:
        raise InvalidArgumentError("sigma must lie in (0, 1)")
    nodes = np.empty(N + 1)
    nodes[0] = 0.0
    nodes[1:] = T * sigma ** np.arange(N - 1, -1.0, -1.0)
    nodes[-1] = T
    return TimePartition(nodes)


def build_geometric_capped(T: float, N: int, sigma: float, layers: int) -> TimePartition:
    """Graded partition with a capped top step.

    The smallest `layers` steps decay geometrically toward t = 0 with ratio
    1/sigma; the remaining steps equal the largest graded one.  Keeps the
    consecutive step ratio at 1/sigma while tau_max ~ T/(N - layers) and
    tau_max/tau_min = sigma**(1 - layers).  Used by refinement families so
    that successive levels genuinely refine.
    """
    if T <= 0 or N < 1:
        raise InvalidArgumentError("need T > 0 and N >= 1")
    if not 0.0 < sigma < 1.0:
        raise InvalidArgumentError("sigma must lie in (0, 1)")
    layers = max(1, min(layers, N))
    if layers == N:
        return build_geometric(T, N, sigma)
    # step exponents N-1, ..., N-layers, then flat at N-layers: steps grow
    # geometrically away from t = 0 and plateau at sigma**(N-layers)
    exponents = np.maximum(np.arange(N - 1, -1.0, -1.0), float(N - layers))
    weights = sigma**exponents
    nodes = np.concatenate([[0.0], np.cumsum(weights)])
    nodes *= T / nodes[-1]
    nodes[-1] = T
    return TimePartition(nodes)


def build_random(T: float, N: int, seed: int, ratio_cap: float) -> TimePartition:
    """Random partition with consecutive step ratios bounded by ratio_cap.

    Each step is drawn in [tau_prev/ratio_cap, tau_prev*ratio_cap], then the
    node list is rescaled to end exactly at T.  Deterministic for fixed seed.
    """
    if T <= 0 or N < 1:
        raise InvalidArgumentError("need T > 0 and N >= 1")
    if ratio_cap < 1.0:
        raise InvalidArgumentError("ratio_cap must be >= 1")
    rng = np.random.default_rng(seed)
    steps = np.empty(N)
    steps[0] = 1.0
    for n in range(1, N):
        lo, hi = steps[n - 1] / ratio_cap, steps[n - 1] * ratio_cap
        steps[n] = rng.uniform(lo, hi)
    nodes = np.concatenate([[0.0], np.cumsum(steps)])
    nodes *= T / nodes[-1]
    nodes[-1] = T
    return TimePartition(nodes)


def step_ratio_constant(P: TimePartition) -> float:
    """max_n tau_n / tau_{n-1}; equals 1 for a single interval."""
    steps = P.steps
    if steps.size == 1:
        return 1.0
    return float((steps[1:] / steps[:-1]).max())


def merge(P1: TimePartition, P2: TimePartition) -> TimePartition:
    """Common refinement; nodes closer than NODE_TOL*T are collapsed."""
    if abs(P1.T - P2.T) > NODE_TOL * max(P1.T, P2.T):
        raise InvalidArgumentError(f"final times differ: {P1.T} vs {P2.T}")
    tol = NODE_TOL * P1.T
    allnodes = np.sort(np.concatenate([P1.nodes, P2.nodes]))
    keep = [allnodes[0]]
    for t in allnodes[1:]:
        if t - keep[-1] > tol:
            keep.append(t)
    keep[0], keep[-1] = 0.0, P1.T
    return TimePartition(np.asarray(keep))


@dataclass(frozen=True)
class PartitionFamily:
    """A refinement sequence of partitions of (0, T).

    kind: "uniform", "geometric" (graded toward 0, grading sigma), or
    "random" (seeded, ratio-capped).  `levels` lists the interval counts.
    Geometric levels use the capped construction with a grading depth of
    base_layers + layers_step * level, so that tau_max decreases across
    levels while tau_max/tau_min still grows without bound.
    """

    kind: str
    T: float
    levels: tuple = ()
    sigma: float = 0.5
    seed: int = 0
    ratio_cap: float = 2.0
    base_layers: int = 6
    layers_step: int = 2

    def __post_init__(self):
        if self.kind not in ("uniform", "geometric", "random"):
            raise InvalidArgumentError(f"unknown family kind {self.kind!r}")
        object.__setattr__(self, "levels", tuple(int(n) for n in self.levels))
        if any(n < 1 for n in self.levels):
            raise InvalidArgumentError("level interval counts must be >= 1")

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def declared_ratio_constant(self) -> float:
        if self.kind == "uniform":
            return 1.0
        if self.kind == "geometric":
            return max(1.0 / self.sigma, (1.0 - self.sigma) / self.sigma)
        return self.ratio_cap

    def build(self, level: int) -> TimePartition:
        N = self.levels[level]
        if self.kind == "uniform":
            return build_uniform(self.T, N)
        if self.kind == "geometric":
            layers = min(N, self.base_layers + self.layers_step * level)
            return build_geometric_capped(self.T, N, self.sigma, layers)
        return build_random(self.T, N, self.seed + level, self.ratio_cap)

    def partitions(self):
        return [self.build(i) for i in range(self.num_levels)]


def _parse_kv(body: str) -> dict:
    out = {}
    for item in body.split(","):
        if not item:
            continue
        if "=" not in item:
            raise InvalidArgumentError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_family(text: str, levels: int = 1, seed: int = 0) -> PartitionFamily:
    """Parse a family spec like "geometric:T=1,N=16,sigma=0.5".

    `levels` levels are produced by doubling N from the given base count.
    """
    if ":" not in text:
        raise InvalidArgumentError(f"family spec {text!r} missing ':'")
    kind, body = text.split(":", 1)
    kv = _parse_kv(body)
    try:
        T = float(kv.pop("T", 1.0))
        N = int(kv.pop("N"))
    except KeyError as exc:
        raise InvalidArgumentError(f"family spec missing {exc}") from exc
    counts = tuple(N * 2**i for i in range(max(1, levels)))
    if kind == "uniform":
        extra = {}
    elif kind == "geometric":
        extra = {"sigma": float(kv.pop("sigma", 0.5))}
    elif kind == "random":
        extra = {
            "seed": int(kv.pop("seed", seed)),
            "ratio_cap": float(kv.pop("cap", kv.pop("ratio_cap", 2.0))),
        }
    else:
        raise InvalidArgumentError(f"unknown family kind {kind!r}")
    if kv:
        raise InvalidArgumentError(f"unknown family keys: {sorted(kv)}")
    return PartitionFamily(kind=kind, T=T, levels=counts, **extra)
