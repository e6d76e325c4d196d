"""Interpolation machinery with certified coefficient and error bounds.

Classical Chebyshev nodes carry the closed-form derivative bound
|H'(t_k)| = m 2^(1-m) / |sin(pi (2k-1) / 2m)| >= m 2^(1-m) for the node
polynomial H(t) = prod (t - t_k).  The mesh-constrained variant snaps each
node to the grid (1/M) Z and certifies the achieved bound computationally
instead of relying on a displacement argument; a local search repairs the
rare marginal case.  Lagrange weights at an exterior target point then obey
the closed-form sum bounds used by the propagation estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import ComplexDomain

# Certified fallback threshold: half the classical derivative bound.
RELAXED_FACTOR = 0.5

# Direct products are safe up to this many nodes; beyond, accumulate in logs.
_LOG_PRODUCT_THRESHOLD = 40


@dataclass(frozen=True)
class NodeSet:
    """Interpolation nodes with the node polynomial's derivative magnitudes."""

    nodes: np.ndarray
    kind: str  # "classical" or "discrete"
    derivative_magnitudes: np.ndarray
    achieved_bound: float
    grid_m: int | None = None  # grid denominator M for discrete nodes

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.float64)
        mags = np.asarray(self.derivative_magnitudes, dtype=np.float64)
        nodes.setflags(write=False)
        mags.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "derivative_magnitudes", mags)
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(mags <= 0):
            raise ValueError("derivative magnitudes must be positive")

    @property
    def m(self) -> int:
        return len(self.nodes)

    def classical_bound(self) -> float:
        """The classical threshold m 2^(1-m)."""
        return self.m * 2.0 ** (1 - self.m)

    def meets_classical(self) -> bool:
        return self.achieved_bound >= self.classical_bound() - 1e-12

    def meets_relaxed(self) -> bool:
        return self.achieved_bound >= RELAXED_FACTOR * self.classical_bound() - 1e-12


@dataclass(frozen=True)
class LagrangeCoeffs:
    """Lagrange evaluation weights at a target point b."""

    coefficients: np.ndarray
    b: float
    sum_abs: float

    def __post_init__(self) -> None:
        coeff = np.asarray(self.coefficients, dtype=np.float64)
        coeff.setflags(write=False)
        object.__setattr__(self, "coefficients", coeff)


@dataclass(frozen=True)
class ErrorBoundParams:
    """Geometry and fitted constant behind the a * q^m interpolation error form."""

    r: float
    R: float
    N: int
    n: int
    C: float
    contour: ComplexDomain | None = None

    def __post_init__(self) -> None:
        if not 0 < self.r < self.R:
            raise ValueError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if self.C <= 0 or self.N < 1 or self.n < 2:
            raise ValueError("C must be positive, N >= 1, n >= 2")
        if self.contour is None:
            object.__setattr__(
                self,
                "contour",
                ComplexDomain(
                    -1 / (2 * self.r), 1 / (2 * self.r), -1 / (16 * self.r), 1 / (16 * self.r)
                ),
            )

    @property
    def amplitude(self) -> float:
        return self.C * float(self.N) ** (1 - self.n)

    @property
    def ratio(self) -> float:
        return 16.0 * (self.R + self.r)


def _derivative_magnitudes(nodes: np.ndarray) -> np.ndarray:
    """|H'(s_j)| = prod_{k != j} |s_j - s_k| for the node polynomial."""
    m = len(nodes)
    if m == 1:
        return np.ones(1)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    if m <= _LOG_PRODUCT_THRESHOLD:
        return np.abs(np.prod(diff, axis=1))
    return np.exp(np.sum(np.log(np.abs(diff)), axis=1))


def chebyshev_nodes(m: int) -> NodeSet:
    """The m classical nodes cos(pi (2k-1) / 2m), sorted ascending."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    k = np.arange(m, 0, -1)
    nodes = np.cos(np.pi * (2 * k - 1) / (2 * m))
    if m % 2 == 1:
        nodes[m // 2] = 0.0  # cos(pi/2) exactly
    mags = _derivative_magnitudes(nodes)
    return NodeSet(nodes, "classical", mags, float(np.min(mags)))


def discrete_nodes(m: int, M: int) -> NodeSet:
    """m distinct nodes on the grid (1/M) Z in [-1, 1], requires M > m^2.

    Snap each classical node to its nearest grid point (classical gaps exceed
    1/m^2 > 1/M, so snapped nodes are automatically distinct); if the derived
    bound falls under half the classical one, a +-2-step local search
    maximizes the minimum derivative magnitude.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if M <= m * m:
        raise ValueError(f"need grid denominator M > m^2, got M={M}, m={m}")
    classical = chebyshev_nodes(m).nodes
    taken: set[int] = set()
    grid_pos: list[int] = []
    # outermost nodes first so collision resolution pushes outward
    for j in sorted(range(m), key=lambda i: -abs(classical[i])):
        g = int(round(classical[j] * M))
        direction = 1 if classical[j] >= 0 else -1
        while g in taken or abs(g) > M:
            if abs(g + direction) > M:
                direction = -direction
            g += direction
        taken.add(g)
        grid_pos.append(g)
    grid_pos.sort()
    # aim for the full classical threshold; the hard guarantee is half of it
    threshold = m * 2.0 ** (1 - m)
    positions = _local_search(np.array(grid_pos, dtype=np.int64), M, threshold)
    nodes = positions / M
    mags = _derivative_magnitudes(nodes)
    return NodeSet(nodes, "discrete", mags, float(np.min(mags)), grid_m=M)


def _local_search(positions: np.ndarray, M: int, threshold: float) -> np.ndarray:
    """Greedy +-2-grid-step moves maximizing the minimum derivative magnitude."""

    def score(pos: np.ndarray) -> float:
        return float(np.min(_derivative_magnitudes(pos / M)))

    best = score(positions)
    if best >= threshold:
        return positions
    improved = True
    while improved and best < threshold:
        improved = False
        for j in range(len(positions)):
            for step in (-2, -1, 1, 2):
                cand = positions.copy()
                cand[j] += step
                if abs(cand[j]) > M or len(set(cand.tolist())) < len(cand):
                    continue
                cand.sort()
                sc = score(cand)
                if sc > best:
                    positions, best = cand, sc
                    improved = True
    return positions


def lagrange_coefficients(nodes: NodeSet | np.ndarray, b: float) -> LagrangeCoeffs:
    """Weights c_k = prod_{j != k} (b - t_j) / (t_k - t_j).

    Reproduces every polynomial of degree < m at b.  A target equal to a node
    returns the trivial delta weights.  For large m the products accumulate
    in log magnitude to dodge overflow.
    """
    pts = nodes.nodes if isinstance(nodes, NodeSet) else np.asarray(nodes, dtype=np.float64)
    m = len(pts)
    b = float(b)
    hit = np.nonzero(pts == b)[0]
    if hit.size:
        coeff = np.zeros(m)
        coeff[hit[0]] = 1.0
        return LagrangeCoeffs(coeff, b, 1.0)
    if m == 1:
        return LagrangeCoeffs(np.ones(1), b, 1.0)
    diff = pts[:, None] - pts[None, :]
    np.fill_diagonal(diff, 1.0)
    num = b - pts
    if m <= _LOG_PRODUCT_THRESHOLD:
        denom = np.prod(diff, axis=1)
        full_num = np.prod(num)
        coeff = full_num / (num * denom)
    else:
        log_den = np.sum(np.log(np.abs(diff)), axis=1)
        sgn_den = np.prod(np.sign(diff), axis=1)
        log_num_all = np.sum(np.log(np.abs(num)))
        sgn_num_all = np.prod(np.sign(num))
        logs = log_num_all - np.log(np.abs(num)) - log_den
        coeff = sgn_num_all * np.sign(num) * sgn_den * np.exp(logs)
    return LagrangeCoeffs(coeff, b, float(np.sum(np.abs(coeff))))


def coefficient_sum_bound(r: float, R: float, m: int, kind: str) -> float:
    """Closed-form bound on sum |c_k| at target R/r.

    kind="classical": (2R/r)^m; kind="discrete": (2(r+R)/r)^m.
    """
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if kind == "classical":
        return (2.0 * R / r) ** m
    if kind == "discrete":
        return (2.0 * (r + R) / r) ** m
    raise ValueError(f"unknown kind {kind!r}")


def interpolation_error_bound(params: ErrorBoundParams, m: int) -> float:
    """C N^(1-n) (16 (R + r))^m: contour estimate for the kernel sections."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return params.amplitude * params.ratio**m
