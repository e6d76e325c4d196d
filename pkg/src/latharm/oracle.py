"""Ground-truth machinery independent of the kernel formula.

A direct sparse Dirichlet solver (the trusted oracle at desk scale, with a
conjugate-gradient fallback for large boxes), layer-wise harmonic extension
of strips, and the alternating-boundary growth counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import (
    BoundaryData,
    Box,
    Coords,
    GridFunction,
    boundary_array,
    residual_field,
    validate_boundary_data,
)

# Direct factorization up to this many unknowns; CG beyond.
DIRECT_SOLVE_LIMIT = 100_000

# The layer recursion amplifies rounding by ~(2n-1) per layer; past this many
# layers float64 results are not trustworthy without rescaling.
DEFAULT_LAYER_BUDGET = 60


@dataclass(frozen=True)
class SolveReport:
    """Solution of a discrete Dirichlet problem plus its self-certification."""

    solution: GridFunction
    max_residual: float
    solver_stats: dict


@dataclass(frozen=True)
class GrowthReport:
    """Per-square maxima of a lattice function and their fitted geometric rate."""

    layer_maxima: list[tuple[int, float]]
    log_layer_maxima: list[tuple[int, float]]
    b: float
    fit_residual: float


def _interior_index(box: Box) -> np.ndarray:
    """Array over the box: running index for interior points, -1 elsewhere."""
    idx = np.full(box.shape, -1, dtype=np.int64)
    inner = tuple(slice(1, s - 1) for s in box.shape)
    count = int(np.prod([s - 2 for s in box.shape]))
    idx[inner] = np.arange(count, dtype=np.int64).reshape([s - 2 for s in box.shape])
    return idx


def _laplace_system(box: Box, g_arr: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """Assemble (2n I - adjacency) u = boundary contributions over the interior."""
    n = box.ndim
    idx = _interior_index(box)
    interior_mask = idx >= 0
    count = int(interior_mask.sum())
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    rhs = np.zeros(count)
    for axis in range(n):
        for step in (1, -1):
            nb_idx = np.roll(idx, -step, axis=axis)
            nb_val = np.roll(g_arr, -step, axis=axis)
            both = interior_mask & (nb_idx >= 0)
            rows.append(idx[both])
            cols.append(nb_idx[both])
            bdry = interior_mask & (nb_idx < 0)
            np.add.at(rhs, idx[bdry], nb_val[bdry])
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    data = np.full(row.shape, -1.0)
    diag = sp.identity(count, format="coo") * (2.0 * n)
    mat = sp.coo_matrix((data, (row, col)), shape=(count, count)) + diag
    return mat.tocsr(), rhs, idx


def solve_dirichlet(
    box: Box,
    g: BoundaryData,
    *,
    tol: float = 1e-12,
    direct_limit: int = DIRECT_SOLVE_LIMIT,
    maxiter: int | None = None,
) -> SolveReport:
    """Solve the discrete Laplace equation on a box with Dirichlet data.

    g must cover every face-interior boundary point (values at corner/edge
    points with >= 2 extremal coordinates are ignored -- they never feed an
    interior stencil and are stored as 0).  The system is symmetric positive
    definite and uniquely solvable; non-convergence of the iterative path
    within its budget is an error.
    """
    if not box.has_interior():
        raise ValueError(f"box {box.lo}..{box.hi} has no interior points to solve for")
    g = validate_boundary_data(box, g)
    g_arr = boundary_array(box, g)
    mat, rhs, idx = _laplace_system(box, g_arr)
    count = mat.shape[0]
    if count <= direct_limit:
        x = spla.spsolve(mat.tocsc(), rhs)
        stats = {"method": "direct", "unknowns": count}
    else:
        iters = 0

        def _count(_):
            nonlocal iters
            iters += 1

        x, info = spla.cg(
            mat, rhs, rtol=tol, atol=0.0, maxiter=maxiter or 20 * count, callback=_count
        )
        if info != 0:
            raise RuntimeError(f"conjugate gradient failed to converge (info={info})")
        stats = {"method": "cg", "unknowns": count, "iterations": iters}

    full = g_arr.copy()
    full[idx >= 0] = x
    solution = GridFunction(box, full)
    res = residual_field(solution)
    return SolveReport(solution, float(np.max(np.abs(res))), stats)


def _neumaier_sum(terms: list[np.ndarray]) -> np.ndarray:
    """Compensated elementwise sum of equally shaped arrays."""
    s = np.zeros_like(terms[0])
    c = np.zeros_like(terms[0])
    for t in terms:
        total = s + t
        c = c + np.where(np.abs(s) >= np.abs(t), (s - total) + t, (t - total) + s)
        s = total
    return s + c


SideData = float | Mapping[Coords, float] | Callable[[Coords], float]


def _side_value(side: SideData, pt: Coords) -> float:
    if callable(side):
        return float(side(pt))
    if isinstance(side, Mapping):
        try:
            return float(side[pt])
        except KeyError:
            raise ValueError(f"missing side value at strip wall point {pt}") from None
    return float(side)


def layerwise_extend(
    u: GridFunction,
    axis: int,
    new_lo: int,
    new_hi: int,
    side: SideData = 0.0,
    *,
    max_layers: int = DEFAULT_LAYER_BUDGET,
) -> GridFunction:
    """Extend a grid function along one axis by the harmonic layer recursion.

    Solving the stencil for the outermost layer value gives

        u(x', t+1) = 2n u(x', t) - u(x', t-1) - sum_{j != axis} [u(x'+e_j, t) + u(x'-e_j, t)]

    at cross-section interior points; wall values (extremal in some other
    axis) of each new layer come from `side` (a constant, mapping, or
    callable on full coordinates).  The result is harmonic at every interior
    point of the extended strip that the recursion touched.

    Layer counts beyond `max_layers` per direction are refused: the recursion
    amplifies rounding geometrically, so long extensions need the caller to
    opt in explicitly.
    """
    box = u.box
    n = box.ndim
    if not 0 <= axis < n:
        raise ValueError(f"axis {axis} out of range for dimension {n}")
    old_lo, old_hi = box.lo[axis], box.hi[axis]
    if old_hi - old_lo < 1:
        raise ValueError("need at least two layers along the extension axis")
    if new_lo > old_lo or new_hi < old_hi:
        raise ValueError("extended range must contain the current range")
    up, down = new_hi - old_hi, old_lo - new_lo
    if max(up, down) > max_layers:
        raise ValueError(
            f"extension of {max(up, down)} layers exceeds the stability budget of "
            f"{max_layers}; pass max_layers explicitly to override"
        )

    new_box = box.with_axis(axis, new_lo, new_hi)
    arr = np.zeros(new_box.shape)
    arr[new_box.slices_for(box)] = u.values

    cross_axes = [j for j in range(n) if j != axis]
    # wall positions: cross-section index tuples with >= 1 extremal coordinate
    cross_shape = tuple(new_box.shape[j] for j in cross_axes)
    wall_offsets: list[tuple[tuple[int, ...], list[int]]] = []
    for off in np.ndindex(cross_shape):
        if any(o == 0 or o == s - 1 for o, s in zip(off, cross_shape)):
            coords = [new_box.lo[j] + o for j, o in zip(cross_axes, off)]
            wall_offsets.append((off, coords))

    def _layer(t: int) -> np.ndarray:
        sel = [slice(None)] * n
        sel[axis] = t - new_lo
        return arr[tuple(sel)]

    def _fill_layer(t: int, prev_t: int, prev2_t: int) -> None:
        cur = _layer(prev_t)
        older = _layer(prev2_t)
        terms = [2.0 * n * cur, -older]
        for k in range(n - 1):
            terms.append(-np.roll(cur, -1, axis=k))
            terms.append(-np.roll(cur, 1, axis=k))
        new = _neumaier_sum(terms)
        # wall values come from side data; the rolled values there are
        # wrap-around garbage anyway
        for off, cross in wall_offsets:
            full = [0] * n
            full[axis] = t
            for j, c in zip(cross_axes, cross):
                full[j] = c
            new[off] = _side_value(side, tuple(full))
        _layer(t)[...] = new

    for t in range(old_hi + 1, new_hi + 1):
        _fill_layer(t, t - 1, t - 2)
    for t in range(old_lo - 1, new_lo - 1, -1):
        _fill_layer(t, t + 1, t + 2)
    return GridFunction(new_box, arr)


def checkerboard_sign(pt: Coords) -> int:
    return -1 if sum(pt) % 2 else 1


def alternating_boundary(box: Box) -> dict[Coords, float]:
    """Boundary values +-1 with checkerboard parity on a wide 2D rectangle.

    The box must be [-N, N] x [-M, M] with N > M >= 1.  Values are defined on
    every boundary point (corners included -- the strip extension reads them);
    the sign at integer coordinates i is (-1)^(i_1 + i_2).
    """
    if box.ndim != 2:
        raise ValueError("alternating boundary data is a 2D construction")
    N, M = box.hi
    if box.lo != (-N, -M):
        raise ValueError("box must be symmetric around the origin")
    if not N > M >= 1:
        raise ValueError(f"need half-width N > half-height M >= 1, got N={N}, M={M}")
    from .lattice import enumerate_boundary

    return {pt: float(checkerboard_sign(pt)) for pt in enumerate_boundary(box, "all")}


def _square_log_maxima(log_abs: np.ndarray, N: int, K_max: int) -> list[float]:
    """log(sup over [-K,K]^2) for K = 0..K_max, from a (2N+1)^2 log-magnitude grid."""
    sups = []
    running = log_abs[N, N]
    sups.append(running)
    for K in range(1, K_max + 1):
        sl = slice(N - K, N + K + 1)
        ring = max(
            float(np.max(log_abs[N - K, sl])),
            float(np.max(log_abs[N + K, sl])),
            float(np.max(log_abs[sl, N - K])),
            float(np.max(log_abs[sl, N + K])),
        )
        running = max(running, ring)
        sups.append(running)
    return sups


def _fit_growth(ks: np.ndarray, log_sups: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log(sup) against K, exponentiated, plus RMS residual."""
    slope, intercept = np.polyfit(ks, log_sups, 1)
    fitted = slope * ks + intercept
    resid = float(np.sqrt(np.mean((log_sups - fitted) ** 2)))
    return float(np.exp(slope)), resid


def growth_rate(u: GridFunction, M: int, K_max: int) -> GrowthReport:
    """Fit sup over [-K,K]^2 against K for M < K <= K_max as a geometric rate."""
    if u.box.ndim != 2:
        raise ValueError("growth measurement is a 2D construction")
    square = Box((-K_max, -K_max), (K_max, K_max))
    if not u.box.contains_box(square):
        raise ValueError(f"function box {u.box.lo}..{u.box.hi} does not cover [-{K_max},{K_max}]^2")
    if K_max - M < 3:
        raise ValueError("need at least 3 squares beyond M to fit a rate")
    arr = u.sub_array(square)
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(arr))
    sups = _square_log_maxima(log_abs, K_max, K_max)
    ks = np.arange(M + 1, K_max + 1)
    logs = np.array([sups[k] for k in ks])
    if not np.all(np.isfinite(logs)):
        raise ValueError("sup-norms vanish on some squares; no geometric rate to fit")
    b, resid = _fit_growth(ks.astype(float), logs)
    maxima = [(int(k), float(np.exp(sups[k]))) for k in ks]
    log_maxima = [(int(k), float(sups[k])) for k in ks]
    return GrowthReport(maxima, log_maxima, b, resid)


# ---------------------------------------------------------------------------
# Alternating counterexample on [-N, N]^2
# ---------------------------------------------------------------------------


def _extend_vertical_log(
    base: np.ndarray, N: int, M: int, sign_row: Callable[[int, np.ndarray], np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Extend a (2M+1)-row strip to the full square, tracking magnitudes in log scale.

    Returns (scaled rows, per-row log scale): row t of the true function is
    rows[t] * exp(scale[t]).  Rescaling keeps the recursion inside float64
    range; side data injected after a rescale is divided by the running
    scale, which is exact in the scaled system by linearity.
    """
    width = 2 * N + 1
    rows = np.zeros((2 * N + 1, width))
    scale = np.zeros(2 * N + 1)
    rows[N - M : N + M + 1] = base

    for direction in (1, -1):
        cur = rows[N + direction * M].copy()
        prev = rows[N + direction * (M - 1)].copy()
        log_s = 0.0
        for t in range(M + 1, N + 1):
            new = 4.0 * cur - prev - np.roll(cur, 1) - np.roll(cur, -1)
            sides = sign_row(direction * t, np.array([0, width - 1]))
            new[[0, -1]] = sides * math.exp(-log_s)
            m = np.max(np.abs(new))
            if m > 1e250:
                new /= m
                cur = cur / m
                log_s += math.log(m)
            rows[N + direction * t] = new
            scale[N + direction * t] = log_s
            prev, cur = cur, new
    return rows, scale


def _alternating_log_field(N: int, M: int) -> np.ndarray:
    """log|u| over [-N,N]^2 for the alternating counterexample (rows by x2)."""
    rect = Box((-N, -M), (N, M))
    g = alternating_boundary(rect)
    rep = solve_dirichlet(rect, g)
    base = rep.solution.values.T.copy()  # rows indexed by x2, columns by x1
    # the strip extension reads the corner values too: restore the pattern
    for pt, val in g.items():
        i, j = rect.index(pt)
        base[j, i] = val

    def sign_row(t: int, cols: np.ndarray) -> np.ndarray:
        return np.array([float(checkerboard_sign((int(c) - N, t))) for c in cols])

    rows, scale = _extend_vertical_log(base, N, M, sign_row)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(rows)) + scale[:, None]


def growth_from_log_sups(log_sups: list[float], M: int, K_max: int) -> GrowthReport:
    """Fit a geometric rate to precomputed log(sup over [-K,K]^2), K = 0..K_max."""
    if K_max - M < 3:
        raise ValueError("need at least 3 squares beyond M to fit a rate")
    ks = np.arange(M + 1, K_max + 1)
    logs = np.array([log_sups[k] for k in ks])
    b, resid = _fit_growth(ks.astype(float), logs)
    maxima = [(int(k), float(np.exp(s)) if s < 700 else math.inf) for k, s in zip(ks, logs)]
    log_maxima = [(int(k), float(s)) for k, s in zip(ks, logs)]
    return GrowthReport(maxima, log_maxima, b, resid)


def counterexample_growth(N: int, M: int, K_max: int | None = None) -> GrowthReport:
    """Growth of the alternating +-1 counterexample, measured in log scale.

    Dirichlet data +-1 with checkerboard parity on the rectangle
    [-N,N] x [-M,M]; the function continues layer by layer to [-N,N]^2 with
    the same parity on the side columns.  Rescaled recursion keeps the
    computation finite for any N.
    """
    if not N > M >= 1:
        raise ValueError(f"need N > M >= 1, got N={N}, M={M}")
    K_max = N if K_max is None else K_max
    if not M < K_max <= N:
        raise ValueError(f"need M < K_max <= N, got K_max={K_max}")
    log_abs = _alternating_log_field(N, M)
    sups = _square_log_maxima(log_abs, N, K_max)
    return growth_from_log_sups(sups, M, K_max)


def counterexample_log_sups(N: int, M: int) -> list[float]:
    """log(sup over [-K,K]^2), K = 0..N, of the alternating counterexample."""
    return _square_log_maxima(_alternating_log_field(N, M), N, N)


# ---------------------------------------------------------------------------
# Zero-cube witness: harmonic on the square, exactly zero on a central cube
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    """Exact-integer harmonic function on a square, vanishing on [-M,M]^2."""

    N: int
    M: int
    side: int
    extent: int
    sup_on_cube: int
    log_sup_extent: float
    max_abs_residual: int
    sup_within: dict[int, float] = field(default_factory=dict)
    sup_within_rect: dict[tuple[int, int], float] = field(default_factory=dict)

    def log_sup(self, K: int) -> float:
        return self.sup_within[K]

    def log_sup_rect(self, a: int, b: int) -> float:
        """log sup over [-a, a] x [-b, b]."""
        return self.sup_within_rect[(a, b)]


def zero_cube_witness(
    N: int,
    M: int,
    side: int = 1,
    radii: tuple[int, ...] = (),
    rect_radii: tuple[tuple[int, int], ...] = (),
    extent: int | None = None,
) -> WitnessReport:
    """Extend the zero function on [-M,M]^2 to a nonzero harmonic function.

    Phase 1 extends the zero square vertically over the full height [-N, N]
    with constant side values at (+-M, t); phase 2 extends the strip
    horizontally, column by column, out to |x1| <= extent (default N; the
    columns beyond any requested extent exist by the same recursion, so a
    partial build loses no generality).  Exact integer arithmetic throughout,
    so "vanishes on the cube" is literal, and every interior stencil of the
    built region is re-verified exactly.
    """
    if not N > M >= 1:
        raise ValueError(f"need N > M >= 1, got N={N}, M={M}")
    if side == 0:
        raise ValueError("side value must be nonzero for a nontrivial witness")
    extent = N if extent is None else extent
    if not M < extent <= N:
        raise ValueError(f"need M < extent <= N, got extent={extent}")
    # full[x1][x2 + N], python ints
    full: dict[int, list[int]] = {x1: [0] * (2 * N + 1) for x1 in range(-M, M + 1)}
    for direction in (1, -1):
        for t in range(M + 1, N + 1):
            for x1 in range(-M, M + 1):
                if abs(x1) == M:
                    full[x1][N + direction * t] = side
                    continue
                c = full[x1][N + direction * (t - 1)]
                p = full[x1][N + direction * (t - 2)]
                left = full[x1 - 1][N + direction * (t - 1)]
                right = full[x1 + 1][N + direction * (t - 1)]
                full[x1][N + direction * t] = 4 * c - p - left - right
    # phase 2: new columns M < |x1| <= extent, side rows x2 = +-N are zero
    for direction in (1, -1):
        for s in range(M + 1, extent + 1):
            x1 = direction * s
            col = [0] * (2 * N + 1)
            c = full[direction * (s - 1)]
            p = full[direction * (s - 2)]
            for k in range(1, 2 * N):
                col[k] = 4 * c[k] - p[k] - c[k - 1] - c[k + 1]
            full[x1] = col

    max_res = 0
    for x1 in range(-extent + 1, extent):
        col = full[x1]
        left, right = full[x1 - 1], full[x1 + 1]
        for k in range(1, 2 * N):
            res = left[k] + right[k] + col[k - 1] + col[k + 1] - 4 * col[k]
            if abs(res) > max_res:
                max_res = abs(res)

    def log_abs_max(a: int, b: int) -> float:
        best = 0
        for x1 in range(-min(a, extent), min(a, extent) + 1):
            col = full[x1]
            for k in range(N - min(b, N), N + min(b, N) + 1):
                v = abs(col[k])
                if v > best:
                    best = v
        return -math.inf if best == 0 else math.log(best)

    sup_cube = max(
        abs(full[x1][k]) for x1 in range(-M, M + 1) for k in range(N - M, N + M + 1)
    )
    within = {int(K): log_abs_max(int(K), int(K)) for K in radii}
    within_rect = {(int(a), int(b)): log_abs_max(int(a), int(b)) for a, b in rect_radii}
    return WitnessReport(
        N, M, side, extent, sup_cube, log_abs_max(extent, N), max_res, within, within_rect
    )
